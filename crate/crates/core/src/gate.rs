//! One complete gate evaluation: pulse, target, controls, both photon
//! sectors and the channel amplitudes s₁, s₂.

use serde::{Deserialize, Serialize};

use crate::controls::{ControlSettings, GateControls, StageSchedule};
use crate::dynamics::{no_kicks, propagate_two_with, CascadeOptions, Discretization, IntegratorOptions, Kicks, TwoExcitationState};
use crate::error::{Error, Result};
use crate::fidelity::{ChannelAmplitudes, Ensemble, FidelityReport, SectorNorms};
use crate::model::{overlap1, GateWindow, InputPulse, SystemParams, TimeGrid, WavePacket1};
use crate::observables::{load_probability_one, load_probability_two};

/// Time grid of a gate run; `t_end = None` ends the grid at 2T_in + T.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub t0: f64,
    #[serde(default)]
    pub t_end: Option<f64>,
    pub n: usize,
}

/// Everything that defines a gate run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub params: SystemParams,
    pub window: GateWindow,
    pub grid: GridSpec,
    /// Intensity FWHM of the Gaussian input.
    pub tau_g: f64,
    /// Input centre; `None` means T_in/2.
    #[serde(default)]
    pub pulse_center: Option<f64>,
    #[serde(default)]
    pub controls: ControlSettings,
    #[serde(default)]
    pub integrator: IntegratorOptions,
    #[serde(default)]
    pub ensemble: Ensemble,
}

impl GateSpec {
    /// κ_C = 6, g = 0.4, Ω₀ = 15g, T_in = 4.3/g, T = 7/g, τ_G = 4 ln 2,
    /// 2000 intervals over [0, 2T_in + T].
    pub fn reference() -> Self {
        let params = SystemParams::reference();
        GateSpec {
            window: GateWindow::reference(params.g),
            params,
            grid: GridSpec {
                t0: 0.0,
                t_end: None,
                n: 2000,
            },
            tau_g: 4.0 * std::f64::consts::LN_2,
            pulse_center: None,
            controls: ControlSettings::default(),
            integrator: IntegratorOptions::default(),
            ensemble: Ensemble::default(),
        }
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        let t_end = self.grid.t_end.unwrap_or(self.window.mirror_axis());
        TimeGrid::new(self.grid.t0, t_end, self.grid.n)
    }

    pub fn center(&self) -> f64 {
        self.pulse_center.unwrap_or(0.5 * self.window.t_in)
    }

    /// Same spec with the grid interval count doubled.
    pub fn halved(&self) -> Self {
        let mut s = self.clone();
        s.grid.n *= 2;
        s
    }
}

/// Resolved inputs of a gate run.
#[derive(Clone, Debug)]
pub struct GateSetup {
    pub spec: GateSpec,
    pub grid: TimeGrid,
    pub pulse: InputPulse,
    /// Ideal single-photon output: the input mirrored into the emission stage.
    pub target: WavePacket1,
    pub controls: GateControls,
}

/// What a run stores beyond the channel amplitudes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunMode {
    pub dense: bool,
    pub budget: bool,
}

/// Outcome of one gate run.
#[derive(Clone, Debug)]
pub struct GateRun {
    pub two: TwoExcitationState,
    pub amps: ChannelAmplitudes,
    pub norm1: f64,
    pub norm2: f64,
    /// Grid index of the end of loading.
    pub load_index: usize,
    pub report: FidelityReport,
}

impl GateRun {
    pub fn absorption_error_one(&self) -> f64 {
        1.0 - load_probability_one(&self.two.one, self.load_index)
    }

    pub fn absorption_error_two(&self) -> f64 {
        1.0 - load_probability_two(&self.two, self.load_index)
    }
}

impl GateSetup {
    pub fn new(spec: &GateSpec) -> Result<Self> {
        spec.params.validate()?;
        let grid = spec.time_grid()?;
        spec.window.validate(&grid)?;
        let pulse = InputPulse::gaussian(grid, spec.tau_g, spec.center())?;
        let axis = spec.window.mirror_axis();
        let target = WavePacket1::from_fn(grid, |t| pulse.at(axis - t)).normalize()?;
        let controls = GateControls::new(&spec.params, &pulse, &spec.window, &spec.controls)?;
        if let Some(k) = &spec.controls.knots {
            if k.len() < 2 {
                return Err(Error::config("controls.knots", "need at least 2 knots"));
            }
        }
        Ok(GateSetup {
            spec: spec.clone(),
            grid,
            pulse,
            target,
            controls,
        })
    }

    /// Same setup with new knot values.
    pub fn with_knots(&self, knots: &[f64]) -> Result<Self> {
        let mut s = self.clone();
        s.controls = self.controls.with_knots(knots)?;
        s.spec.controls.knots = Some(knots.to_vec());
        Ok(s)
    }

    pub fn knots(&self) -> &[f64] {
        &self.controls.spline.knot_values
    }

    pub fn schedule(&self) -> &StageSchedule {
        self.controls.schedule()
    }

    pub fn discretize(&self) -> Result<Discretization> {
        Discretization::new(&self.spec.params, &self.controls, &self.pulse, &self.spec.integrator)
    }

    /// Run without emitter kicks.
    pub fn run(&self, mode: RunMode) -> Result<GateRun> {
        let d = self.discretize()?;
        self.run_with(&d, &no_kicks(&self.grid), mode)
    }

    /// Run on a prepared discretization with emitter sign flips `kicks`.
    pub fn run_with(&self, d: &Discretization, kicks: &Kicks, mode: RunMode) -> Result<GateRun> {
        let opts = CascadeOptions {
            dense: mode.dense,
            budget: mode.budget,
            ..CascadeOptions::default()
        };
        let two = propagate_two_with(d, kicks, Some(&self.target), &opts)?;
        let s1 = overlap1(&two.one.xi_out, &self.target)?;
        let pair = two
            .target_overlap
            .ok_or_else(|| Error::Dependency("two-photon target overlap missing".into()))?;
        let amps = ChannelAmplitudes { s1, s2: pair.amplitude };
        let norm1 = two.one.xi_out.norm_sq();
        let norm2 = pair.norm;
        let load_index = self.grid.nearest(self.spec.window.t_in);
        let last = self.grid.len() - 1;
        let norms = SectorNorms {
            released_one: norm1,
            released_two: norm2,
            retained_one: two.one.population(last),
            retained_two: two.retained,
        };
        let report = FidelityReport::new(
            amps,
            norms,
            self.spec.ensemble,
            load_probability_one(&two.one, load_index),
            load_probability_two(&two, load_index),
        )?;
        Ok(GateRun {
            two,
            amps,
            norm1,
            norm2,
            load_index,
            report,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossless_run_keeps_every_excitation() {
        let r = GateSetup::new(&GateSpec::reference()).unwrap().run(RunMode::default()).unwrap();
        let n = r.report.norms;
        assert!((n.survival_one() - 1.0).abs() < 1e-6, "{n:?}");
        assert!((n.survival_two() - 1.0).abs() < 1e-6, "{n:?}");
        assert!(r.absorption_error_one() < 1e-4);
        assert!(r.absorption_error_two() < 2e-4);
    }

    #[test]
    fn without_emitter_single_photons_pass_unchanged() {
        let mut spec = GateSpec::reference();
        spec.params.g = 0.0;
        let r = GateSetup::new(&spec).unwrap().run(RunMode::default()).unwrap();
        assert!((r.amps.s1 - 1.0).norm() < 1e-4, "{}", r.amps.s1);
        assert!((r.amps.s2 - 1.0).norm() < 1e-4, "{}", r.amps.s2);
    }

    #[test]
    fn dense_and_streaming_runs_agree() {
        let s = GateSetup::new(&GateSpec::reference()).unwrap();
        let a = s.run(RunMode::default()).unwrap();
        let b = s.run(RunMode { dense: true, budget: true }).unwrap();
        assert_eq!(a.amps, b.amps);
        assert!(b.two.xi_out2.is_some() && b.two.budget.is_some());
    }

    #[test]
    fn halved_spec_doubles_the_grid() {
        let s = GateSpec::reference();
        assert_eq!(s.halved().time_grid().unwrap().n, 2 * s.time_grid().unwrap().n);
        assert_eq!(s.center(), 0.5 * s.window.t_in);
    }
}
