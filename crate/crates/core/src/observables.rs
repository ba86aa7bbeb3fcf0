//! Load probabilities, the nine-term occupation budget of the two-photon
//! problem, and the one- versus two-photon phase difference.

use serde::Serialize;

use crate::dynamics::{OneExcitationState, TwoExcitationState};
use crate::error::{Error, Result};
use crate::model::WavePacket1;
use crate::quadrature::{running, running_tail};

/// Phase floor below which arg() is not evaluated.
pub const PHASE_FLOOR: f64 = 1e-6;

/// 𝒫_load⁽¹⁾ = |ψ_b|² + |ψ_e|² at grid index `n`.
pub fn load_probability_one(one: &OneExcitationState, n: usize) -> f64 {
    one.psi_b[n].norm_sqr() + one.psi_e[n].norm_sqr()
}

/// 𝒫_load⁽²⁾ = |ψ_02g|² + |ψ_01e|² at grid index `n`.
pub fn load_probability_two(two: &TwoExcitationState, n: usize) -> f64 {
    two.layers.psi[2][n].norm_sqr() + two.layers.psi[4][n].norm_sqr()
}

/// Occupation probabilities of the two-photon problem at every grid index.
#[derive(Clone, Debug, Serialize)]
pub struct ProbabilityBudget {
    pub t: Vec<f64>,
    pub p00g: Vec<f64>,
    pub p00e: Vec<f64>,
    pub p10g: Vec<f64>,
    pub p01g: Vec<f64>,
    pub p11g: Vec<f64>,
    pub p20g: Vec<f64>,
    pub p02g: Vec<f64>,
    pub p10e: Vec<f64>,
    pub p01e: Vec<f64>,
}

impl ProbabilityBudget {
    pub const NAMES: [&'static str; 9] = ["P00g", "P00e", "P10g", "P01g", "P11g", "P20g", "P02g", "P10e", "P01e"];

    pub fn row(&self, n: usize) -> [f64; 9] {
        [
            self.p00g[n],
            self.p00e[n],
            self.p10g[n],
            self.p01g[n],
            self.p11g[n],
            self.p20g[n],
            self.p02g[n],
            self.p10e[n],
            self.p01e[n],
        ]
    }

    pub fn sum(&self, n: usize) -> f64 {
        self.row(n).iter().sum()
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Evaluate the budget from the stored emission-time decomposition.
///
/// With R(t) = ∫_t^{tN}|ξ_in|², the photon-in-waveguide terms are
/// P_00g = R² + R∫_{t0}^{t}|e₁|² + ∫dt_m∫_{t_m}^{t}|f|², and
/// P_x = |φ_x|²R + ∫_{t0}^{t}|y_x(t; t_m)|²dt_m for x ∈ {10g, 01g, 00e}; the
/// remaining five are moduli squared of the two-excitation amplitudes.
pub fn occupation_probabilities(two: &TwoExcitationState) -> Result<ProbabilityBudget> {
    let sums = two
        .budget
        .as_ref()
        .ok_or_else(|| Error::Dependency("two-photon run was made without budget accumulation".into()))?;
    let g = two.grid;
    let dt = g.dt();
    let inten: Vec<f64> = two.xi_in.amp.iter().map(|z| z.norm_sqr()).collect();
    let r = running_tail(&inten, dt);
    let e1: Vec<f64> = two.e1.iter().map(|z| z.norm_sqr()).collect();
    let e1r = running(&e1, dt);
    let n = g.len();
    let sq = |v: &Vec<num_complex::Complex64>| v.iter().map(|z| z.norm_sqr()).collect::<Vec<f64>>();
    let phi = &two.layers.phi;
    let psi = &two.layers.psi;
    let layer1 = |x: usize| -> Vec<f64> { (0..n).map(|i| phi[x][i].norm_sqr() * r[i] + sums.residual[x][i]).collect() };
    Ok(ProbabilityBudget {
        t: g.times(),
        p00g: (0..n).map(|i| r[i] * r[i] + r[i] * e1r[i] + sums.pair[i]).collect(),
        p00e: layer1(2),
        p10g: layer1(0),
        p01g: layer1(1),
        p11g: sq(&psi[1]),
        p20g: sq(&psi[0]),
        p02g: sq(&psi[2]),
        p10e: sq(&psi[3]),
        p01e: sq(&psi[4]),
    })
}

/// Lossless one-photon balance |ψ|² + ∫_{t0}^t|ξ_out|² + ∫_t^{tN}|ξ_in|².
pub fn one_photon_balance(one: &OneExcitationState, xi_in: &WavePacket1) -> Result<Vec<f64>> {
    one.grid.check_same(&xi_in.grid)?;
    let dt = one.grid.dt();
    let out: Vec<f64> = one.xi_out.amp.iter().map(|z| z.norm_sqr()).collect();
    let inp: Vec<f64> = xi_in.amp.iter().map(|z| z.norm_sqr()).collect();
    let (ro, ri) = (running(&out, dt), running_tail(&inp, dt));
    Ok((0..one.grid.len()).map(|i| one.population(i) + ro[i] + ri[i]).collect())
}

/// Δφ(t) = arg ψ_02g − 2 arg ψ_01g⁽¹⁾, unwrapped in time; `None` where either
/// amplitude is below `floor`.
pub fn phase_difference(two: &TwoExcitationState, one: &OneExcitationState, floor: f64) -> Result<Vec<Option<f64>>> {
    two.grid.check_same(&one.grid)?;
    let mut out = Vec::with_capacity(one.grid.len());
    let mut prev: Option<f64> = None;
    for i in 0..one.grid.len() {
        let (p02, pb) = (two.layers.psi[2][i], one.psi_b[i]);
        if p02.norm() < floor || pb.norm() < floor {
            out.push(None);
            continue;
        }
        let raw = p02.arg() - 2.0 * pb.arg();
        let v = match prev {
            None => {
                let w = raw.rem_euclid(2.0 * std::f64::consts::PI);
                if w > std::f64::consts::PI {
                    w - 2.0 * std::f64::consts::PI
                } else {
                    w
                }
            }
            Some(p) => {
                let tau = 2.0 * std::f64::consts::PI;
                p + (raw - p + std::f64::consts::PI).rem_euclid(tau) - std::f64::consts::PI
            }
        };
        prev = Some(v);
        out.push(Some(v));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controls::{ConstantControls, FnControls};
    use crate::dynamics::{no_kicks, propagate_two_with, CascadeOptions, Discretization, IntegratorOptions};
    use crate::model::{InputPulse, SystemParams, TimeGrid};
    use num_complex::Complex64 as C64;

    fn params(g: f64) -> SystemParams {
        SystemParams {
            kappa_c: 1.0,
            g,
            omega0: 1.0,
            ..SystemParams::reference()
        }
    }

    fn run(p: &SystemParams, c: &dyn crate::controls::Controls) -> TwoExcitationState {
        let grid = TimeGrid::new(0.0, 30.0, 3000).unwrap();
        let pulse = InputPulse::gaussian(grid, 1.5, 4.5).unwrap();
        let io = IntegratorOptions {
            step_rate: 0.001,
            ..IntegratorOptions::default()
        };
        let d = Discretization::new(p, c, &pulse, &io).unwrap();
        let opts = CascadeOptions {
            budget: true,
            ..CascadeOptions::streaming()
        };
        propagate_two_with(&d, &no_kicks(&grid), None, &opts).unwrap()
    }

    fn loaded() -> FnControls<impl Fn(f64) -> f64 + Sync, impl Fn(f64) -> C64 + Sync> {
        FnControls {
            omega: |t: f64| 1.0 + 0.5 * (0.8 * t).sin(),
            lambda: |t: f64| C64::from_polar(0.6 * (-(t - 5.0f64).powi(2) / 8.0).exp(), 0.2 * t),
        }
    }

    #[test]
    fn budget_starts_with_both_photons_incoming() {
        let b = occupation_probabilities(&run(&params(0.5), &loaded())).unwrap();
        assert!((b.p00g[0] - 1.0).abs() < 1e-12);
        assert!(b.row(0)[1..].iter().all(|&p| p == 0.0));
    }

    #[test]
    fn lossless_budget_sums_to_one() {
        let b = occupation_probabilities(&run(&params(0.5), &loaded())).unwrap();
        for i in (0..b.len()).step_by(80) {
            assert!((b.sum(i) - 1.0).abs() < 1e-6, "t = {}: {}", b.t[i], b.sum(i));
        }
    }

    #[test]
    fn empty_cavity_transmits_both_photons() {
        let c = ConstantControls {
            omega: 1.0,
            lambda: C64::new(0.0, 0.0),
        };
        let b = occupation_probabilities(&run(&params(0.0), &c)).unwrap();
        assert!((b.p00g[b.len() - 1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn linear_system_has_no_phase_difference() {
        let two = run(&params(0.0), &loaded());
        let dphi = phase_difference(&two, &two.one, PHASE_FLOOR).unwrap();
        let defined: Vec<f64> = dphi.into_iter().flatten().collect();
        assert!(!defined.is_empty());
        assert!(defined.iter().all(|x| x.abs() < 1e-6), "{:?}", defined.iter().fold(0.0f64, |a, x| a.max(x.abs())));
    }

    #[test]
    fn gaps_below_the_floor() {
        let c = ConstantControls {
            omega: 1.0,
            lambda: C64::new(0.0, 0.0),
        };
        let two = run(&params(0.5), &c);
        let dphi = phase_difference(&two, &two.one, PHASE_FLOOR).unwrap();
        assert!(dphi.iter().all(Option::is_none));
        assert_eq!(load_probability_one(&two.one, 10), 0.0);
    }

    #[test]
    fn one_photon_balance_is_conserved() {
        let two = run(&params(0.5), &loaded());
        let bal = one_photon_balance(&two.one, &two.xi_in).unwrap();
        assert!(bal.iter().all(|x| (x - 1.0).abs() < 1e-6));
    }
}
