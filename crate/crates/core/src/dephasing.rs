//! Monte-Carlo unraveling of emitter pure dephasing.
//!
//! Each trajectory draws Poisson jump times at rate γ_dp; at every jump the
//! emitter components of all amplitudes change sign (σ_z up to a global
//! phase). Jumps are snapped to the nearest grid point.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{no_kicks, Discretization, Kicks};
use crate::error::{Error, Result};
use crate::gate::{GateRun, GateSetup, RunMode};
use crate::model::TimeGrid;

/// Generator used for all jump sampling: ChaCha with 8 rounds, seeded from a
/// u64, one stream per trajectory.
pub const GENERATOR: &str = "chacha8";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DephasingSettings {
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    /// Filled from the run seed; not part of the config schema.
    #[serde(skip)]
    pub seed: u64,
}

fn default_n_traj() -> usize {
    500
}

impl Default for DephasingSettings {
    fn default() -> Self {
        DephasingSettings {
            n_traj: default_n_traj(),
            seed: 0,
        }
    }
}

/// Generator for trajectory `index` of a run seeded with `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Jump times in (t0, t_end] with exponential inter-arrival times of rate `gamma_dp`.
pub fn sample_jumps(gamma_dp: f64, t0: f64, t_end: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    if !(gamma_dp >= 0.0) || !gamma_dp.is_finite() {
        return Err(Error::invalid(format!("gamma_dp must be finite and >= 0, got {gamma_dp}")));
    }
    let mut out = Vec::new();
    if gamma_dp == 0.0 {
        return Ok(out);
    }
    let exp = Exp::new(gamma_dp).map_err(|e| Error::invalid(e.to_string()))?;
    let mut t = t0;
    loop {
        let tau: f64 = exp.sample(rng);
        if tau <= 0.0 {
            continue;
        }
        t += tau;
        if t > t_end {
            return Ok(out);
        }
        out.push(t);
    }
}

/// Jump record of one trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryPlan {
    pub seed: u64,
    pub index: u64,
    pub jump_times: Vec<f64>,
}

impl TrajectoryPlan {
    pub fn sample(gamma_dp: f64, grid: &TimeGrid, seed: u64, index: u64) -> Result<Self> {
        let mut rng = trajectory_rng(seed, index);
        Ok(TrajectoryPlan {
            seed,
            index,
            jump_times: sample_jumps(gamma_dp, grid.t0, grid.t_end, &mut rng)?,
        })
    }

    /// Kick mask on `grid`; returns the mask and the largest snapping shift.
    pub fn kicks(&self, grid: &TimeGrid) -> (Kicks, f64) {
        let mut k = no_kicks(grid);
        let mut shift: f64 = 0.0;
        for &t in &self.jump_times {
            let i = grid.nearest(t);
            k[i] ^= true;
            shift = shift.max((grid.t(i) - t).abs());
        }
        (k, shift)
    }
}

/// Plans for `n_traj` trajectories.
pub fn plan_trajectories(gamma_dp: f64, grid: &TimeGrid, seed: u64, n_traj: usize) -> Result<Vec<TrajectoryPlan>> {
    (0..n_traj as u64).map(|i| TrajectoryPlan::sample(gamma_dp, grid, seed, i)).collect()
}

/// Coherent gate run with the plan's kicks on a prepared discretization.
pub fn run_trajectory(setup: &GateSetup, d: &Discretization, plan: &TrajectoryPlan, mode: RunMode) -> Result<GateRun> {
    let (kicks, _) = plan.kicks(&setup.grid);
    setup.run_with(d, &kicks, mode)
}

/// Per-trajectory fidelities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub index: u64,
    pub jumps: usize,
    pub snap_shift: f64,
    pub fidelity: f64,
    pub conditional_fidelity: Option<f64>,
}

/// Mean and standard error over trajectories.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McSummary {
    pub generator: &'static str,
    pub seed: u64,
    pub n_traj: usize,
    pub gamma_dp: f64,
    pub mean_fidelity: f64,
    pub stderr: f64,
    pub mean_conditional_fidelity: Option<f64>,
    pub conditional_stderr: Option<f64>,
    pub mean_jumps: f64,
    pub samples: Vec<TrajectorySample>,
}

impl McSummary {
    pub fn gate_error(&self) -> f64 {
        1.0 - self.mean_fidelity
    }

    pub fn conditional_gate_error(&self) -> Option<f64> {
        self.mean_conditional_fidelity.map(|f| 1.0 - f)
    }
}

/// Sum in a fixed binary tree so the result does not depend on scheduling.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    match x.len() {
        0 => 0.0,
        1 => x[0],
        n => pairwise_sum(&x[..n / 2]) + pairwise_sum(&x[n / 2..]),
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(x) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = x.iter().map(|v| (v - mean).powi(2)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Trajectory-averaged gate fidelity at the setup's γ_dp.
pub fn mc_fidelity(setup: &GateSetup, settings: &DephasingSettings) -> Result<McSummary> {
    if settings.n_traj == 0 {
        return Err(Error::config("dephasing.n_traj", "must be >= 1"));
    }
    let gamma = setup.spec.params.gamma_dp;
    let d = setup.discretize()?;
    let plans = plan_trajectories(gamma, &setup.grid, settings.seed, settings.n_traj)?;
    let samples: Vec<TrajectorySample> = plans
        .par_iter()
        .map(|p| {
            let (_, snap_shift) = p.kicks(&setup.grid);
            let r = run_trajectory(setup, &d, p, RunMode::default())?;
            Ok(TrajectorySample {
                index: p.index,
                jumps: p.jump_times.len(),
                snap_shift,
                fidelity: 1.0 - r.report.gate_error,
                conditional_fidelity: r.report.conditional_gate_error.map(|e| 1.0 - e),
            })
        })
        .collect::<Result<_>>()?;
    let f: Vec<f64> = samples.iter().map(|s| s.fidelity).collect();
    let (mean_fidelity, stderr) = mean_stderr(&f);
    let cond: Option<Vec<f64>> = samples.iter().map(|s| s.conditional_fidelity).collect();
    let (mc, sc) = match cond {
        Some(c) => {
            let (m, s) = mean_stderr(&c);
            (Some(m), Some(s))
        }
        None => (None, None),
    };
    let jumps: Vec<f64> = samples.iter().map(|s| s.jumps as f64).collect();
    Ok(McSummary {
        generator: GENERATOR,
        seed: settings.seed,
        n_traj: settings.n_traj,
        gamma_dp: gamma,
        mean_fidelity,
        stderr,
        mean_conditional_fidelity: mc,
        conditional_stderr: sc,
        mean_jumps: pairwise_sum(&jumps) / jumps.len() as f64,
        samples,
    })
}

/// Ramsey toy problem: an emitter prepared in (|g⟩+|e⟩)/√2 with no cavity.
/// Returns the trajectory mean and standard error of 2 Re⟨σ₋⟩ at time `t`,
/// whose ensemble value is e^{−2γ_dp t}.
pub fn ramsey_coherence(gamma_dp: f64, t: f64, n_traj: usize, seed: u64) -> Result<(f64, f64)> {
    let c: Vec<f64> = (0..n_traj as u64)
        .map(|i| {
            let mut rng = trajectory_rng(seed, i);
            let n = sample_jumps(gamma_dp, 0.0, t, &mut rng)?.len();
            Ok(if n % 2 == 0 { 1.0 } else { -1.0 })
        })
        .collect::<Result<_>>()?;
    Ok(mean_stderr(&c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::GateSpec;

    #[test]
    fn no_jumps_without_dephasing() {
        let mut rng = trajectory_rng(1, 0);
        assert!(sample_jumps(0.0, 0.0, 1e9, &mut rng).unwrap().is_empty());
        assert!(sample_jumps(-1.0, 0.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn jumps_are_sorted_inside_the_window() {
        let mut rng = trajectory_rng(3, 0);
        let j = sample_jumps(2.0, 1.0, 50.0, &mut rng).unwrap();
        assert!(j.windows(2).all(|w| w[0] < w[1]));
        assert!(j.iter().all(|&t| t > 1.0 && t <= 50.0));
    }

    #[test]
    fn inter_arrival_mean_matches_rate() {
        let gamma = 0.7;
        let mut rng = trajectory_rng(11, 0);
        let exp = Exp::new(gamma).unwrap();
        let x: Vec<f64> = (0..100_000).map(|_| exp.sample(&mut rng)).collect();
        let (m, s) = mean_stderr(&x);
        assert!((m - 1.0 / gamma).abs() < 3.0 * s, "{m} ± {s}");
        // The window sampler sees the same law: jump count mean γ(t_end − t0).
        let counts: Vec<f64> = (0..20_000)
            .map(|i| sample_jumps(gamma, 0.0, 3.0, &mut trajectory_rng(5, i)).unwrap().len() as f64)
            .collect();
        let (m, s) = mean_stderr(&counts);
        assert!((m - 3.0 * gamma).abs() < 3.0 * s);
    }

    #[test]
    fn survival_matches_exponential() {
        let (gamma, t, n) = (0.3, 2.0, 20_000u64);
        let none: Vec<f64> = (0..n)
            .map(|i| {
                let j = sample_jumps(gamma, 0.0, t, &mut trajectory_rng(9, i)).unwrap();
                if j.is_empty() { 1.0 } else { 0.0 }
            })
            .collect();
        let (m, s) = mean_stderr(&none);
        assert!((m - (-gamma * t).exp()).abs() < 3.0 * s);
    }

    #[test]
    fn ramsey_decay() {
        for (gamma, t) in [(0.1, 2.0), (0.5, 1.0)] {
            let (m, s) = ramsey_coherence(gamma, t, 2000, 21).unwrap();
            assert!((m - (-2.0 * gamma * t).exp()).abs() < 3.0 * s, "{m} ± {s}");
        }
    }

    #[test]
    fn plans_are_seed_deterministic() {
        let g = TimeGrid::new(0.0, 40.0, 100).unwrap();
        let a = plan_trajectories(0.2, &g, 4, 10).unwrap();
        assert_eq!(a, plan_trajectories(0.2, &g, 4, 10).unwrap());
        assert_ne!(a, plan_trajectories(0.2, &g, 5, 10).unwrap());
    }

    #[test]
    fn double_jump_at_one_instant_cancels() {
        let g = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let p = TrajectoryPlan {
            seed: 0,
            index: 0,
            jump_times: vec![0.31, 0.29],
        };
        let (k, shift) = p.kicks(&g);
        assert!(k.iter().all(|b| !b));
        assert!((shift - 0.01).abs() < 1e-12);
    }

    #[test]
    fn pairwise_sum_is_exact_on_integers() {
        let x: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&x), 500_500.0);
        assert_eq!(mean_stderr(&[2.0]), (2.0, 0.0));
    }

    fn small_setup() -> GateSetup {
        let mut spec = GateSpec::reference();
        spec.grid.n = 400;
        GateSetup::new(&spec).unwrap()
    }

    #[test]
    fn zero_rate_reproduces_deterministic_run_exactly() {
        let s = small_setup();
        let det = s.run(RunMode::default()).unwrap();
        let mc = mc_fidelity(&s, &DephasingSettings { n_traj: 3, seed: 8 }).unwrap();
        assert_eq!(mc.mean_fidelity, 1.0 - det.report.gate_error);
        assert_eq!(mc.stderr, 0.0);
        assert!(mc.samples.iter().all(|x| x.fidelity == 1.0 - det.report.gate_error));
    }

    #[test]
    fn jump_after_emission_leaves_output_unchanged() {
        let s = small_setup();
        let d = s.discretize().unwrap();
        let det = s.run(RunMode::default()).unwrap();
        let p = TrajectoryPlan {
            seed: 0,
            index: 0,
            jump_times: vec![s.grid.t_end],
        };
        let r = run_trajectory(&s, &d, &p, RunMode::default()).unwrap();
        assert!((r.amps.s1 - det.amps.s1).norm() < 1e-12);
        assert!((r.amps.s2 - det.amps.s2).norm() < 1e-12);
    }

    #[test]
    fn zero_trajectories_is_a_config_error() {
        let s = small_setup();
        assert!(mc_fidelity(&s, &DephasingSettings { n_traj: 0, seed: 0 }).is_err());
    }
}
