//! Parameter sweeps over the figure axes and control miscalibration probes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{optimize_gate, OptimizerSettings};
use crate::dephasing::{mc_fidelity, DephasingSettings};
use crate::error::{Error, Result};
use crate::gate::{GateSetup, GateSpec, RunMode};

/// Swept parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Ω₀/g; knots scale with Ω₀.
    Omega0OverG,
    /// κ_l/g on both cavity modes.
    KappaLOverG,
    /// γ_dp/g, evaluated by trajectory averaging.
    GammaDpOverG,
    /// Gate time T in units of 1/g.
    GateTime,
    /// g in the base frequency unit, keeping Ω₀/g, T_in·g and T·g fixed.
    G,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::Omega0OverG => "omega0_over_g",
            SweepAxis::KappaLOverG => "kappa_l_over_g",
            SweepAxis::GammaDpOverG => "gamma_dp_over_g",
            SweepAxis::GateTime => "gate_time_g",
            SweepAxis::G => "g",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// Re-optimize the knots at every point.
    #[serde(default)]
    pub reoptimize: bool,
    /// On the κ_l axis also set γ_e = κ_l.
    #[serde(default = "yes")]
    pub gamma_e_follows_kappa_l: bool,
}

fn yes() -> bool {
    true
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        for (i, v) in self.values.iter().enumerate() {
            let ok = match self.axis {
                SweepAxis::KappaLOverG | SweepAxis::GammaDpOverG => v.is_finite() && *v >= 0.0,
                _ => v.is_finite() && *v > 0.0,
            };
            if !ok {
                return Err(Error::config(format!("sweep.values[{i}]"), format!("{v} is out of range for {}", self.axis.as_str())));
            }
        }
        Ok(())
    }
}

/// One point of a sweep; `error` is set when the point failed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub gate_error: Option<f64>,
    pub conditional_error: Option<f64>,
    /// Trajectory standard error on the γ_dp axis.
    pub stderr: Option<f64>,
    pub absorption_error_one: Option<f64>,
    pub absorption_error_two: Option<f64>,
    pub knots: Vec<f64>,
    pub error: Option<String>,
}

/// Gate spec at one sweep point.
pub fn apply_axis(base: &GateSpec, spec: &SweepSpec, value: f64) -> GateSpec {
    let mut s = base.clone();
    let g = s.params.g;
    let rescale_knots = |s: &mut GateSpec, f: f64| {
        if let Some(k) = &mut s.controls.knots {
            k.iter_mut().for_each(|v| *v *= f);
        }
    };
    match spec.axis {
        SweepAxis::Omega0OverG => {
            let w = value * g;
            let f = w / s.params.omega0;
            rescale_knots(&mut s, f);
            s.params.omega0 = w;
        }
        SweepAxis::KappaLOverG => {
            s.params.kappa_l = value * g;
            s.params.kappa_l_b = None;
            if spec.gamma_e_follows_kappa_l {
                s.params.gamma_e = value * g;
            }
        }
        SweepAxis::GammaDpOverG => s.params.gamma_dp = value * g,
        SweepAxis::GateTime => s.window.t_gate = value / g,
        SweepAxis::G => {
            let f = value / g;
            s.params.g = value;
            s.params.omega0 *= f;
            rescale_knots(&mut s, f);
            s.window.t_in /= f;
            s.window.t_gate /= f;
            if let Some(c) = &mut s.pulse_center {
                *c /= f;
            }
        }
    }
    s
}

fn run_point(spec: &SweepSpec, point: &GateSpec, opt: &OptimizerSettings, mc: &DephasingSettings) -> Result<SweepRow> {
    let mut setup = GateSetup::new(point)?;
    if spec.reoptimize {
        let o = optimize_gate(&setup, opt)?;
        setup = setup.with_knots(&o.best_knots)?;
    }
    let run = setup.run(RunMode::default())?;
    let (gate_error, conditional_error, stderr) = if point.params.gamma_dp > 0.0 {
        let m = mc_fidelity(&setup, mc)?;
        (m.gate_error(), m.conditional_gate_error(), Some(m.stderr))
    } else {
        (run.report.gate_error, run.report.conditional_gate_error, None)
    };
    Ok(SweepRow {
        value: 0.0,
        gate_error: Some(gate_error),
        conditional_error,
        stderr,
        absorption_error_one: Some(run.absorption_error_one()),
        absorption_error_two: Some(run.absorption_error_two()),
        knots: setup.knots().to_vec(),
        error: None,
    })
}

/// Evaluate every sweep point; failed points carry their error message.
pub fn run_sweep(spec: &SweepSpec, base: &GateSpec, opt: &OptimizerSettings, mc: &DephasingSettings) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    Ok(spec
        .values
        .par_iter()
        .map(|&v| {
            let point = apply_axis(base, spec, v);
            match run_point(spec, &point, opt, mc) {
                Ok(r) => SweepRow { value: v, ..r },
                Err(e) => SweepRow {
                    value: v,
                    gate_error: None,
                    conditional_error: None,
                    stderr: None,
                    absorption_error_one: None,
                    absorption_error_two: None,
                    knots: point.controls.knots.clone().unwrap_or_default(),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}

/// Control field whose global scale is perturbed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Miscalibrated {
    Omega,
    Lambda,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MiscalibrationRow {
    pub field: Miscalibrated,
    pub perturbation: f64,
    pub gate_error: f64,
    pub delta: f64,
}

/// Gate error under relative scale errors `1 + ε` on one control field, without re-optimization.
pub fn miscalibration_probe(setup: &GateSetup, field: Miscalibrated, perturbations: &[f64]) -> Result<Vec<MiscalibrationRow>> {
    if let Some(e) = perturbations.iter().find(|e| !(e.abs() < 1.0)) {
        return Err(Error::invalid(format!("perturbation {e} must have magnitude < 1")));
    }
    let base = setup.run(RunMode::default())?.report.gate_error;
    perturbations
        .par_iter()
        .map(|&eps| {
            let mut spec = setup.spec.clone();
            match field {
                Miscalibrated::Omega => spec.controls.omega_scale *= 1.0 + eps,
                Miscalibrated::Lambda => spec.controls.lambda_scale *= 1.0 + eps,
            }
            let e = GateSetup::new(&spec)?.run(RunMode::default())?.report.gate_error;
            Ok(MiscalibrationRow {
                field,
                perturbation: eps,
                gate_error: e,
                delta: e - base,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> GateSpec {
        let mut s = GateSpec::reference();
        s.grid.n = 400;
        s
    }

    fn sweep(axis: SweepAxis, values: Vec<f64>) -> SweepSpec {
        SweepSpec {
            axis,
            values,
            reoptimize: false,
            gamma_e_follows_kappa_l: true,
        }
    }

    #[test]
    fn empty_value_list_gives_empty_table() {
        let rows = run_sweep(&sweep(SweepAxis::KappaLOverG, vec![]), &small_spec(), &Default::default(), &Default::default()).unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn axes_set_the_expected_parameters() {
        let mut base = small_spec();
        base.controls.knots = Some(vec![6.0; 20]);
        let s = apply_axis(&base, &sweep(SweepAxis::Omega0OverG, vec![]), 10.0);
        assert!((s.params.omega0 - 4.0).abs() < 1e-12);
        assert!(s.controls.knots.unwrap().iter().all(|k| (k - 4.0).abs() < 1e-12));
        let s = apply_axis(&base, &sweep(SweepAxis::KappaLOverG, vec![]), 0.1);
        assert!((s.params.kappa_l - 0.04).abs() < 1e-15 && (s.params.gamma_e - 0.04).abs() < 1e-15);
        let s = apply_axis(&base, &sweep(SweepAxis::GammaDpOverG, vec![]), 0.01);
        assert!((s.params.gamma_dp - 0.004).abs() < 1e-15);
        let s = apply_axis(&base, &sweep(SweepAxis::GateTime, vec![]), 8.0);
        assert!((s.window.t_gate - 20.0).abs() < 1e-12);
        let s = apply_axis(&base, &sweep(SweepAxis::G, vec![]), 0.8);
        assert!((s.params.omega0 / s.params.g - 15.0).abs() < 1e-12);
        assert!((s.window.t_in * s.params.g - base.window.t_in * base.params.g).abs() < 1e-12);
    }

    #[test]
    fn negative_values_are_rejected() {
        let r = run_sweep(&sweep(SweepAxis::Omega0OverG, vec![5.0, -1.0]), &small_spec(), &Default::default(), &Default::default());
        assert!(matches!(r, Err(Error::Config { .. })));
    }

    #[test]
    fn failing_point_is_recorded_and_sweep_continues() {
        // T·g so large that the gate window no longer fits the fixed grid.
        let mut base = small_spec();
        base.grid.t_end = Some(base.window.mirror_axis());
        let rows = run_sweep(&sweep(SweepAxis::GateTime, vec![7.0, 70.0]), &base, &Default::default(), &Default::default()).unwrap();
        assert!(rows[0].error.is_none() && rows[0].gate_error.is_some());
        assert!(rows[1].error.is_some() && rows[1].gate_error.is_none());
    }

    #[test]
    fn zero_perturbation_gives_zero_delta() {
        let setup = GateSetup::new(&small_spec()).unwrap();
        for f in [Miscalibrated::Omega, Miscalibrated::Lambda] {
            let r = miscalibration_probe(&setup, f, &[0.0, 0.01]).unwrap();
            assert_eq!(r[0].delta, 0.0);
            assert!(r[1].delta.is_finite());
        }
        assert!(miscalibration_probe(&setup, Miscalibrated::Omega, &[1.0]).is_err());
    }
}
