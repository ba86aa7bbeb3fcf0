//! Gate-error minimization over the Ω(t) spline knots and parameter sweeps.

pub mod nelder_mead;
pub mod sweep;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::{GateSetup, RunMode};

pub use nelder_mead::{nelder_mead, Bounds, NelderMeadOptions, NelderMeadResult, OptimizationProblem};
pub use sweep::{apply_axis, miscalibration_probe, run_sweep, Miscalibrated, MiscalibrationRow, SweepAxis, SweepRow, SweepSpec};

/// Multi-start settings for the knot optimization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSettings {
    #[serde(default)]
    pub nelder_mead: NelderMeadOptions,
    /// Number of simplex starts; the first is unjittered.
    #[serde(default = "default_starts")]
    pub starts: usize,
    /// Initial axis step in units of Ω₀.
    #[serde(default = "default_step_fraction")]
    pub step_fraction: f64,
    /// Relative jitter of the starting point and steps for starts after the first.
    #[serde(default = "default_jitter")]
    pub jitter: f64,
    /// Knot bounds in units of Ω₀.
    #[serde(default = "default_lower")]
    pub lower: f64,
    #[serde(default = "default_upper")]
    pub upper: f64,
    /// Knot level inside the interaction stage for starts after the first,
    /// in units of Ω₀; `None` jitters around the initial knots instead.
    #[serde(default = "default_notch_level")]
    pub notch_level: Option<f64>,
    /// Filled from the run seed; not part of the config schema.
    #[serde(skip)]
    pub seed: u64,
}

fn default_starts() -> usize {
    4
}
fn default_step_fraction() -> f64 {
    0.1
}
fn default_jitter() -> f64 {
    0.5
}
fn default_notch_level() -> Option<f64> {
    Some(0.0)
}
fn default_lower() -> f64 {
    -2.0
}
fn default_upper() -> f64 {
    2.0
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            nelder_mead: NelderMeadOptions::default(),
            starts: default_starts(),
            step_fraction: default_step_fraction(),
            jitter: default_jitter(),
            lower: default_lower(),
            upper: default_upper(),
            notch_level: default_notch_level(),
            seed: 0,
        }
    }
}

/// Best result over all starts.
#[derive(Clone, Debug, Serialize)]
pub struct OptimizationOutcome {
    pub initial_knots: Vec<f64>,
    pub initial_error: f64,
    pub best_knots: Vec<f64>,
    pub best_error: f64,
    pub best_start: usize,
    pub starts: Vec<NelderMeadResult>,
    /// Every start ran out of budget.
    pub exhausted: bool,
}

/// Gate error of a knot vector; failed runs score +∞.
pub fn gate_objective(setup: &GateSetup, knots: &[f64]) -> f64 {
    setup
        .with_knots(knots)
        .and_then(|s| s.run(RunMode::default()))
        .map(|r| r.report.gate_error)
        .unwrap_or(f64::INFINITY)
}

/// Simplex problems for each start. The first is the plain axis simplex at
/// `initial`; the others jitter around `alternate` when given, else `initial`.
pub fn start_problems(
    initial: &[f64],
    alternate: Option<&[f64]>,
    omega0: f64,
    settings: &OptimizerSettings,
) -> Result<Vec<OptimizationProblem>> {
    if settings.starts == 0 {
        return Err(Error::config("optimizer.starts", "must be >= 1"));
    }
    if !(settings.lower <= settings.upper) {
        return Err(Error::config("optimizer.lower", "bounds must be ordered"));
    }
    let n = initial.len();
    if alternate.is_some_and(|a| a.len() != n) {
        return Err(Error::invalid("alternate start must match the number of knots"));
    }
    let step = settings.step_fraction * omega0;
    let bounds = Bounds::uniform(n, settings.lower * omega0, settings.upper * omega0);
    let mut out = Vec::with_capacity(settings.starts);
    for s in 0..settings.starts {
        let mut x = match (s, alternate) {
            (1.., Some(a)) => a.to_vec(),
            _ => initial.to_vec(),
        };
        let mut steps = vec![step; n];
        if s > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
            rng.set_stream(s as u64);
            for (xi, si) in x.iter_mut().zip(steps.iter_mut()) {
                *xi += settings.jitter * step * rng.random_range(-1.0..1.0);
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                *si = sign * step * (1.0 + settings.jitter * rng.random_range(-1.0..1.0));
            }
        }
        out.push(OptimizationProblem {
            initial: x,
            steps,
            bounds: Some(bounds.clone()),
            options: settings.nelder_mead.clone(),
        });
    }
    Ok(out)
}

/// Multi-start minimization of `objective`; see [`start_problems`].
pub fn multi_start(
    initial: &[f64],
    alternate: Option<&[f64]>,
    omega0: f64,
    settings: &OptimizerSettings,
    objective: impl Fn(&[f64]) -> f64 + Sync,
) -> Result<OptimizationOutcome> {
    let problems = start_problems(initial, alternate, omega0, settings)?;
    let initial_error = objective(initial);
    let starts: Vec<NelderMeadResult> = problems
        .par_iter()
        .map(|p| nelder_mead(p, &objective))
        .collect::<Result<_>>()?;
    let mut best_start = 0;
    for (i, r) in starts.iter().enumerate() {
        if r.best_f < starts[best_start].best_f {
            best_start = i;
        }
    }
    let (best_knots, best_error) = if starts[best_start].best_f <= initial_error {
        (starts[best_start].best_x.clone(), starts[best_start].best_f)
    } else {
        (initial.to_vec(), initial_error)
    };
    Ok(OptimizationOutcome {
        initial_knots: initial.to_vec(),
        initial_error,
        best_knots,
        best_error,
        best_start,
        exhausted: starts.iter().all(|r| r.exhausted),
        starts,
    })
}

/// Knots of `setup` with those strictly inside the interaction stage set to `level`.
pub fn notch_knots(setup: &GateSetup, level: f64) -> Vec<f64> {
    let sched = setup.schedule();
    let times = setup.controls.spline.knot_times();
    times
        .iter()
        .zip(setup.knots())
        .map(|(&t, &k)| if t > sched.load_end && t < sched.interact_end { level } else { k })
        .collect()
}

/// Minimize the gate error over the knots of `setup`, starting from its current knots.
pub fn optimize_gate(setup: &GateSetup, settings: &OptimizerSettings) -> Result<OptimizationOutcome> {
    let initial = setup.knots().to_vec();
    let omega0 = setup.spec.params.omega0;
    let alternate = settings.notch_level.map(|v| notch_knots(setup, v * omega0));
    multi_start(&initial, alternate.as_deref(), omega0, settings, |k| gate_objective(setup, k))
}
