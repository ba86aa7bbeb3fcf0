//! Control fields: the spline-parameterized emitter detuning Ω(t) and the
//! complex loading field Λ(t) that transfers photons between the
//! waveguide-coupled mode â and the storage mode b̂.

pub mod spline;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GateWindow, InputPulse, SystemParams, TimeGrid};
pub use spline::{eval_spline, SmoothedSpline, SplineControl};

/// Time-dependent control fields consumed by the integrators.
pub trait Controls: Sync {
    /// Emitter–cavity detuning Ω(t).
    fn omega(&self, t: f64) -> f64;
    /// Loading field Λ(t).
    fn lambda(&self, t: f64) -> C64;
}

/// Time-independent controls.
#[derive(Clone, Copy, Debug)]
pub struct ConstantControls {
    pub omega: f64,
    pub lambda: C64,
}

impl Controls for ConstantControls {
    fn omega(&self, _t: f64) -> f64 {
        self.omega
    }
    fn lambda(&self, _t: f64) -> C64 {
        self.lambda
    }
}

/// Controls given by closures.
pub struct FnControls<F, G>
where
    F: Fn(f64) -> f64 + Sync,
    G: Fn(f64) -> C64 + Sync,
{
    pub omega: F,
    pub lambda: G,
}

impl<F, G> Controls for FnControls<F, G>
where
    F: Fn(f64) -> f64 + Sync,
    G: Fn(f64) -> C64 + Sync,
{
    fn omega(&self, t: f64) -> f64 {
        (self.omega)(t)
    }
    fn lambda(&self, t: f64) -> C64 {
        (self.lambda)(t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Loading,
    Interaction,
    Emission,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Loading => "loading",
            Stage::Interaction => "interaction",
            Stage::Emission => "emission",
        }
    }
}

/// Boundaries of the loading, interaction and emission stages.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageSchedule {
    pub t0: f64,
    pub load_end: f64,
    pub interact_end: f64,
    pub emit_end: f64,
}

impl StageSchedule {
    pub fn new(grid: &TimeGrid, window: &GateWindow) -> Result<Self> {
        window.validate(grid)?;
        Ok(StageSchedule {
            t0: grid.t0,
            load_end: window.t_in,
            interact_end: window.t_in + window.t_gate,
            emit_end: grid.t_end,
        })
    }

    pub fn stage(&self, t: f64) -> Stage {
        if t <= self.load_end {
            Stage::Loading
        } else if t < self.interact_end {
            Stage::Interaction
        } else {
            Stage::Emission
        }
    }

    pub fn interaction_time(&self) -> f64 {
        self.interact_end - self.load_end
    }

    /// Time `t` in the emission stage mirrors `axis − t` in the loading stage.
    pub fn mirror_axis(&self) -> f64 {
        self.load_end + self.interact_end
    }
}

/// Dressed-state frequency shift g²/Ω₀.
pub fn dressed_shift(params: &SystemParams) -> Result<f64> {
    if params.omega0 == 0.0 {
        return Err(Error::DivisionByZero(
            "the loading-field phase law needs omega0 != 0 (dispersive regime)".into(),
        ));
    }
    Ok(params.g * params.g / params.omega0)
}

/// φ_Λ(t): slope g²/Ω₀ while loading and emitting, frozen during interaction.
pub fn phase_at(shift: f64, schedule: &StageSchedule, t: f64) -> f64 {
    match schedule.stage(t) {
        Stage::Loading => shift * t,
        Stage::Interaction => shift * schedule.load_end,
        Stage::Emission => shift * (t - schedule.interaction_time()),
    }
}

/// φ_Λ sampled on the grid.
pub fn lambda_phase_law(params: &SystemParams, schedule: &StageSchedule, grid: &TimeGrid) -> Result<Vec<f64>> {
    let shift = dressed_shift(params)?;
    Ok(grid.times().into_iter().map(|t| phase_at(shift, schedule, t)).collect())
}

/// Exact-absorption loading law evaluable at any time.
///
/// While loading, mode â must hold ξ/√κ so nothing is reflected. Energy
/// balance then fixes the storage amplitude B² = ∫_{t0}^t|ξ|² − |ξ|²/κ and
/// the transfer rate Λ = ((√κ/2)|ξ| − |ξ|'/√κ)/B. The envelope is a signed
/// real number: it turns negative in the leading tail where the pulse grows
/// faster than κ/2. Emission replays the loading envelope mirrored in time.
#[derive(Clone, Debug)]
pub struct LoadLaw {
    pulse: InputPulse,
    kappa_c: f64,
    shift: f64,
    delta_lambda: f64,
    schedule: StageSchedule,
    lambda_max: f64,
    scale: f64,
}

impl LoadLaw {
    pub fn new(
        pulse: InputPulse,
        params: &SystemParams,
        schedule: StageSchedule,
        lambda_max: f64,
        scale: f64,
    ) -> Result<Self> {
        if !(params.kappa_c > 0.0) {
            return Err(Error::invalid("loading needs kappa_c > 0"));
        }
        if !(lambda_max > 0.0 && lambda_max.is_finite()) {
            return Err(Error::invalid(format!("lambda_max must be > 0, got {lambda_max}")));
        }
        Ok(LoadLaw {
            pulse,
            kappa_c: params.kappa_c,
            shift: dressed_shift(params)?,
            delta_lambda: params.delta_lambda,
            schedule,
            lambda_max,
            scale,
        })
    }

    pub fn schedule(&self) -> &StageSchedule {
        &self.schedule
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// Loading-stage envelope and whether it was clamped.
    fn loading_envelope(&self, t: f64) -> (f64, bool) {
        let k = self.kappa_c;
        let (a, da) = self.pulse.abs_and_slope(t);
        let h = 0.5 * k.sqrt() * a - da / k.sqrt();
        if h == 0.0 {
            return (0.0, false);
        }
        let b2 = self.pulse.energy_before(t) - a * a / k;
        let cap = self.lambda_max.copysign(h);
        if b2 <= 0.0 {
            return (cap, true);
        }
        let v = h / b2.sqrt();
        if v.abs() > self.lambda_max {
            (cap, true)
        } else {
            (v, false)
        }
    }

    /// Signed real envelope and clamp flag at `t`, before `scale`.
    pub fn envelope(&self, t: f64) -> (f64, bool) {
        match self.schedule.stage(t) {
            Stage::Loading => self.loading_envelope(t),
            Stage::Interaction => (0.0, false),
            Stage::Emission => self.loading_envelope(self.schedule.mirror_axis() - t),
        }
    }

    pub fn phase(&self, t: f64) -> f64 {
        phase_at(self.shift, &self.schedule, t)
    }

    pub fn value(&self, t: f64) -> C64 {
        let (e, _) = self.envelope(t);
        if e == 0.0 {
            return C64::new(0.0, 0.0);
        }
        C64::from_polar(self.scale * e, self.phase(t) - self.delta_lambda * t)
    }
}

/// Loading field sampled on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadField {
    /// Signed real amplitude; |Λ| is its absolute value.
    pub envelope: Vec<f64>,
    pub phase: Vec<f64>,
    pub stage: Vec<Stage>,
    pub warnings: Vec<String>,
}

/// Sample the exact-absorption loading law for `xi_in` on its grid.
pub fn build_load_field(
    xi_in: &InputPulse,
    params: &SystemParams,
    schedule: &StageSchedule,
    lambda_max: f64,
) -> Result<LoadField> {
    let law = LoadLaw::new(xi_in.clone(), params, *schedule, lambda_max, 1.0)?;
    Ok(law.sample(&xi_in.grid()))
}

impl LoadLaw {
    pub fn sample(&self, grid: &TimeGrid) -> LoadField {
        let mut clamped = Vec::new();
        let mut envelope = Vec::with_capacity(grid.len());
        for (i, t) in grid.times().into_iter().enumerate() {
            let (e, c) = self.envelope(t);
            if c {
                clamped.push(i);
            }
            envelope.push(self.scale * e);
        }
        let mut warnings = Vec::new();
        if let (Some(first), Some(last)) = (clamped.first(), clamped.last()) {
            let msg = format!(
                "loading envelope clamped at |Lambda| = {} on {} grid points (indices {}..={})",
                self.lambda_max,
                clamped.len(),
                first,
                last
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
        LoadField {
            envelope,
            phase: grid.times().into_iter().map(|t| self.phase(t)).collect(),
            stage: grid.times().into_iter().map(|t| self.schedule.stage(t)).collect(),
            warnings,
        }
    }
}

/// Controls settings shared by the gate runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSettings {
    #[serde(default = "default_n_knots")]
    pub n_knots: usize,
    /// Smoothing time; `None` means T/10.
    #[serde(default)]
    pub tau_spline: Option<f64>,
    /// Clamp on |Λ| in units of κ_C.
    #[serde(default = "default_lambda_max_factor")]
    pub lambda_max_factor: f64,
    /// Global amplitude scale on Λ.
    #[serde(default = "one")]
    pub lambda_scale: f64,
    /// Global scale on Ω(t), used for miscalibration probes.
    #[serde(default = "one")]
    pub omega_scale: f64,
    /// Knot values; `None` means all equal to Ω₀.
    #[serde(default)]
    pub knots: Option<Vec<f64>>,
}

fn default_n_knots() -> usize {
    20
}
fn default_lambda_max_factor() -> f64 {
    20.0
}
fn one() -> f64 {
    1.0
}

impl Default for ControlSettings {
    fn default() -> Self {
        ControlSettings {
            n_knots: default_n_knots(),
            tau_spline: None,
            lambda_max_factor: default_lambda_max_factor(),
            lambda_scale: 1.0,
            omega_scale: 1.0,
            knots: None,
        }
    }
}

/// Ω(t) from a smoothing spline plus the exact-absorption loading field.
#[derive(Clone, Debug)]
pub struct GateControls {
    pub spline: SplineControl,
    smoothed: SmoothedSpline,
    omega_scale: f64,
    pub load: LoadLaw,
}

impl GateControls {
    pub fn new(
        params: &SystemParams,
        pulse: &InputPulse,
        window: &GateWindow,
        settings: &ControlSettings,
    ) -> Result<Self> {
        let grid = pulse.grid();
        let schedule = StageSchedule::new(&grid, window)?;
        let knots = match &settings.knots {
            Some(k) => k.clone(),
            None => vec![params.omega0; settings.n_knots],
        };
        let spline = SplineControl {
            knot_values: knots,
            t_start: grid.t0,
            t_end: grid.t_end,
            tau_spline: settings.tau_spline.unwrap_or(window.t_gate / 10.0),
        };
        let smoothed = spline.smooth()?;
        let load = LoadLaw::new(
            pulse.clone(),
            params,
            schedule,
            settings.lambda_max_factor * params.kappa_c,
            settings.lambda_scale,
        )?;
        Ok(GateControls {
            spline,
            smoothed,
            omega_scale: settings.omega_scale,
            load,
        })
    }

    /// Same controls with different knot values.
    pub fn with_knots(&self, knots: &[f64]) -> Result<Self> {
        let spline = SplineControl {
            knot_values: knots.to_vec(),
            ..self.spline.clone()
        };
        let smoothed = spline.smooth()?;
        Ok(GateControls {
            spline,
            smoothed,
            omega_scale: self.omega_scale,
            load: self.load.clone(),
        })
    }

    pub fn schedule(&self) -> &StageSchedule {
        self.load.schedule()
    }
}

impl Controls for GateControls {
    fn omega(&self, t: f64) -> f64 {
        self.omega_scale * self.smoothed.eval(t)
    }
    fn lambda(&self, t: f64) -> C64 {
        self.load.value(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InputPulse;

    fn setup() -> (SystemParams, InputPulse, GateWindow, StageSchedule) {
        let p = SystemParams::reference();
        let w = GateWindow::reference(p.g);
        let grid = TimeGrid::new(0.0, w.mirror_axis(), 2000).unwrap();
        let pulse = InputPulse::gaussian(grid, 4.0 * std::f64::consts::LN_2, w.t_in / 2.0).unwrap();
        let s = StageSchedule::new(&grid, &w).unwrap();
        (p, pulse, w, s)
    }

    #[test]
    fn schedule_is_ordered_and_tagged() {
        let (_, _, _, s) = setup();
        assert!(s.t0 < s.load_end && s.load_end < s.interact_end && s.interact_end < s.emit_end);
        assert_eq!(s.stage(1.0), Stage::Loading);
        assert_eq!(s.stage(15.0), Stage::Interaction);
        assert_eq!(s.stage(30.0), Stage::Emission);
    }

    #[test]
    fn phase_law_values() {
        let (mut p, pulse, _, s) = setup();
        let shift = dressed_shift(&p).unwrap();
        assert!((phase_at(shift, &s, 1.0) - p.g / 15.0).abs() < 1e-15);
        p.g = 0.0;
        let ph = lambda_phase_law(&p, &s, &pulse.grid()).unwrap();
        assert!(ph.iter().all(|v| *v == 0.0));
        p.g = 0.4;
        p.omega0 = 1e12;
        let ph = lambda_phase_law(&p, &s, &pulse.grid()).unwrap();
        assert!(ph.iter().all(|v| v.abs() < 1e-9));
        p.omega0 = 0.0;
        assert!(matches!(lambda_phase_law(&p, &s, &pulse.grid()), Err(Error::DivisionByZero(_))));
    }

    #[test]
    fn phase_is_continuous_piecewise_linear() {
        let (p, pulse, _, s) = setup();
        let g = pulse.grid();
        let ph = lambda_phase_law(&p, &s, &g).unwrap();
        let shift = dressed_shift(&p).unwrap();
        for i in 1..g.len() {
            let slope = (ph[i] - ph[i - 1]) / g.dt();
            assert!(slope.abs() < 1e-9 || (slope - shift).abs() < 1e-9 || (ph[i] - ph[i - 1]).abs() <= shift * g.dt() + 1e-12);
        }
        assert!((phase_at(shift, &s, s.load_end) - phase_at(shift, &s, s.load_end + 1e-12)).abs() < 1e-9);
        assert!((phase_at(shift, &s, s.interact_end - 1e-12) - phase_at(shift, &s, s.interact_end)).abs() < 1e-9);
    }

    #[test]
    fn load_field_is_zero_while_interacting_and_mirrored() {
        let (p, pulse, _, s) = setup();
        let lf = build_load_field(&pulse, &p, &s, 20.0 * p.kappa_c).unwrap();
        let g = pulse.grid();
        for i in 0..g.len() {
            if lf.stage[i] == Stage::Interaction {
                assert_eq!(lf.envelope[i], 0.0);
            }
        }
        // Grid spans exactly [0, axis], so index i mirrors n − i.
        for i in 0..g.len() {
            let j = g.n - i;
            if lf.stage[i] == Stage::Loading && lf.stage[j] == Stage::Emission {
                assert!((lf.envelope[i] - lf.envelope[j]).abs() < 1e-9 * (1.0 + lf.envelope[i].abs()));
            }
        }
    }

    #[test]
    fn zero_input_gives_zero_envelope() {
        let (p, pulse, _, s) = setup();
        let z = InputPulse::zero(pulse.grid());
        let lf = build_load_field(&z, &p, &s, 120.0).unwrap();
        assert!(lf.envelope.iter().all(|v| *v == 0.0));
        assert!(lf.warnings.is_empty());
    }

    #[test]
    fn large_kappa_envelope_approaches_energy_ratio() {
        // For κ → ∞ the law tends to (√κ/2)|ξ|/√(∫|ξ|²).
        let (mut p, pulse, _, s) = setup();
        p.kappa_c = 1e6;
        let law = LoadLaw::new(pulse.clone(), &p, s, 1e12, 1.0).unwrap();
        for t in [4.0, 5.375, 7.0] {
            let (a, _) = pulse.abs_and_slope(t);
            let expect = 0.5 * p.kappa_c.sqrt() * a / pulse.energy_before(t).sqrt();
            let (e, _) = law.envelope(t);
            assert!((e / expect - 1.0).abs() < 1e-2, "t {t}: {e} vs {expect}");
        }
    }

    #[test]
    fn clamp_is_reported() {
        let (p, pulse, _, s) = setup();
        let lf = build_load_field(&pulse, &p, &s, 1.0).unwrap();
        assert!(!lf.warnings.is_empty());
        assert!(lf.envelope.iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn gate_controls_start_at_off_detuning() {
        let (p, pulse, w, _) = setup();
        let c = GateControls::new(&p, &pulse, &w, &ControlSettings::default()).unwrap();
        assert!((c.omega(12.0) - p.omega0).abs() < 1e-12);
        assert_eq!(c.lambda(15.0), C64::new(0.0, 0.0));
        assert!(c.lambda(5.0).norm() > 0.0);
    }
}
