//! Equations of motion for the one- and two-excitation sectors.
//!
//! Amplitudes follow the interaction-picture Schrödinger equation of a
//! waveguide-coupled mode â, a storage mode b̂ coupled to â by the loading
//! field Λ(t), and an emitter coupled to b̂ with rate g and detuning Ω(t).
//! All propagation uses fixed-step classical RK4 on a uniform grid, with an
//! integer number of substeps per grid interval. Controls and the input
//! envelope are sampled once at every half substep.

pub mod analytic;
pub mod collision;
pub mod one;
pub mod oracle;
pub mod propagator;
pub mod two;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::controls::Controls;
use crate::error::{Error, Result};
use crate::model::{InputPulse, SystemParams, TimeGrid};

pub use analytic::{dressed_spectrum, free_evolution_analytic, two_photon_phase_shift, DressedSpectrum};
pub use collision::{oracle_collision_model, CollisionOptions, CollisionResult};
pub use one::{propagate_one, propagate_one_from, OneExcitationState};
pub use oracle::{compare_with_collision, OracleReport};
pub use propagator::{build_propagator, Propagator1};
pub use two::{cascade, propagate_layers, propagate_two, propagate_two_with, BudgetSums, CascadeOptions, Layers, PairOverlap, TwoExcitationState};

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const I: C64 = C64 { re: 0.0, im: 1.0 };

pub type Vec3 = [C64; 3];
pub type Mat3 = [[C64; 3]; 3];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorOptions {
    /// Fixed substeps per grid interval; `None` picks them from `step_rate`.
    #[serde(default)]
    pub substeps: Option<usize>,
    /// Target bound on (largest rate) × (substep length).
    #[serde(default = "default_step_rate")]
    pub step_rate: f64,
    /// Allowed growth of the lossless norm balance.
    #[serde(default = "default_divergence_tol")]
    pub divergence_tol: f64,
}

fn default_step_rate() -> f64 {
    0.02
}
fn default_divergence_tol() -> f64 {
    1e-6
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            substeps: None,
            step_rate: default_step_rate(),
            divergence_tol: default_divergence_tol(),
        }
    }
}

/// Rates of the drive-free generator.
#[derive(Clone, Copy, Debug)]
pub struct Rates {
    /// Total decay of â, κ_C + κ_l.
    pub ka: f64,
    /// Decay of b̂.
    pub kb: f64,
    pub ge: f64,
    pub g: f64,
    pub sqrt_kc: f64,
}

impl Rates {
    pub fn new(p: &SystemParams) -> Self {
        Rates {
            ka: p.kappa_c + p.kappa_l,
            kb: p.kappa_lb(),
            ge: p.gamma_e,
            g: p.g,
            sqrt_kc: p.kappa_c.sqrt(),
        }
    }
}

/// Controls and input sampled at every half substep of a grid.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub grid: TimeGrid,
    pub rates: Rates,
    pub substeps: usize,
    /// Substep length dt / substeps.
    pub h: f64,
    omega: Vec<f64>,
    lambda: Vec<C64>,
    xi: Vec<C64>,
    /// ξ at grid points.
    pub xi_grid: Vec<C64>,
    pub lossless: bool,
    pub divergence_tol: f64,
}

impl Discretization {
    pub fn new(
        params: &SystemParams,
        controls: &dyn Controls,
        pulse: &InputPulse,
        opts: &IntegratorOptions,
    ) -> Result<Self> {
        params.validate()?;
        let grid = pulse.grid();
        grid.validate()?;
        let substeps = match opts.substeps {
            Some(0) => return Err(Error::invalid("substeps must be >= 1")),
            Some(s) => s,
            None => {
                if !(opts.step_rate > 0.0) {
                    return Err(Error::invalid("step_rate must be > 0"));
                }
                let mut rate = params.max_rate();
                for j in 0..=4 * grid.n {
                    let t = grid.t0 + j as f64 * grid.dt() / 4.0;
                    rate = rate.max(controls.lambda(t).norm()).max(controls.omega(t).abs());
                }
                ((grid.dt() * rate / opts.step_rate).ceil() as usize).max(1)
            }
        };
        let h = grid.dt() / substeps as f64;
        let count = 2 * substeps * grid.n + 1;
        let mut omega = Vec::with_capacity(count);
        let mut lambda = Vec::with_capacity(count);
        let mut xi = Vec::with_capacity(count);
        for j in 0..count {
            let t = grid.t0 + j as f64 * (0.5 * h);
            let om = controls.omega(t);
            let la = controls.lambda(t);
            if !om.is_finite() || !la.re.is_finite() || !la.im.is_finite() {
                return Err(Error::invalid(format!("control fields are not finite at t = {t}")));
            }
            omega.push(om);
            lambda.push(la);
            xi.push(pulse.at(t));
        }
        Ok(Discretization {
            grid,
            rates: Rates::new(params),
            substeps,
            h,
            omega,
            lambda,
            xi,
            xi_grid: pulse.packet().amp.clone(),
            lossless: params.is_lossless(),
            divergence_tol: opts.divergence_tol,
        })
    }

    /// Half-substep sample index at the start of substep `q` of interval `k`.
    #[inline]
    fn base(&self, k: usize, q: usize) -> usize {
        2 * (k * self.substeps + q)
    }

    #[inline]
    pub(crate) fn at(&self, j: usize) -> (f64, C64, C64) {
        (self.omega[j], self.lambda[j], self.xi[j])
    }

    /// Advance `y` by one grid interval `k` with RK4; `f(j, y)` is the
    /// derivative using samples at half-substep index `j`.
    #[inline]
    pub(crate) fn advance<const D: usize>(
        &self,
        k: usize,
        y: &mut [C64; D],
        f: &impl Fn(usize, &[C64; D]) -> [C64; D],
    ) {
        for q in 0..self.substeps {
            let j = self.base(k, q);
            rk4(y, self.h, j, f);
        }
    }

    /// As [`Self::advance`], calling `obs(j, y)` after every substep with the
    /// half-substep index `j` of the substep end.
    #[inline]
    pub(crate) fn advance_observed<const D: usize>(
        &self,
        k: usize,
        y: &mut [C64; D],
        f: &impl Fn(usize, &[C64; D]) -> [C64; D],
        mut obs: impl FnMut(usize, &[C64; D]),
    ) {
        for q in 0..self.substeps {
            let j = self.base(k, q);
            rk4(y, self.h, j, f);
            obs(j + 2, y);
        }
    }

    /// Drive-free step matrix of interval `k`: the linear part of the RK4 map.
    pub fn step_matrix(&self, k: usize) -> Mat3 {
        let r = self.rates;
        let f = |j: usize, y: &Vec3| {
            let (om, la, _) = self.at(j);
            one_rhs(&r, om, la, ZERO, y)
        };
        let mut cols = [[ZERO; 3]; 3];
        for (c, col) in cols.iter_mut().enumerate() {
            col[c] = C64::new(1.0, 0.0);
            self.advance(k, col, &f);
        }
        // Row-major result: P[i][c] = cols[c][i].
        let mut p = [[ZERO; 3]; 3];
        for i in 0..3 {
            for c in 0..3 {
                p[i][c] = cols[c][i];
            }
        }
        p
    }

    pub fn step_matrices(&self) -> Vec<Mat3> {
        (0..self.grid.n).map(|k| self.step_matrix(k)).collect()
    }
}

#[inline]
fn axpy<const D: usize>(y: &[C64; D], a: f64, k: &[C64; D]) -> [C64; D] {
    let mut o = *y;
    for i in 0..D {
        o[i] += k[i] * a;
    }
    o
}

#[inline]
fn rk4<const D: usize>(y: &mut [C64; D], h: f64, j: usize, f: &impl Fn(usize, &[C64; D]) -> [C64; D]) {
    let k1 = f(j, y);
    let k2 = f(j + 1, &axpy(y, 0.5 * h, &k1));
    let k3 = f(j + 1, &axpy(y, 0.5 * h, &k2));
    let k4 = f(j + 2, &axpy(y, h, &k3));
    for i in 0..D {
        y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
    }
}

/// One-excitation derivative; `drive` is the source on â (√κ_C ξ for a single
/// photon).
#[inline]
pub fn one_rhs(r: &Rates, omega: f64, lambda: C64, drive: C64, y: &Vec3) -> Vec3 {
    let [a, b, e] = *y;
    [
        a * (-0.5 * r.ka) - I * lambda.conj() * b + drive,
        b * (-0.5 * r.kb) - I * lambda * a - I * r.g * e,
        e * C64::new(-0.5 * r.ge, -omega) - I * r.g * b,
    ]
}

/// Two-excitation derivative over (|20g⟩, |11g⟩, |02g⟩, |10e⟩, |01e⟩),
/// sourced by `s = √κ_C ξ` times the layer-one amplitudes `phi`.
#[inline]
pub fn two_rhs(r: &Rates, omega: f64, lambda: C64, s: C64, phi: &Vec3, y: &[C64; 5]) -> [C64; 5] {
    let sq2 = std::f64::consts::SQRT_2;
    let [p20, p11, p02, p10e, p01e] = *y;
    let lc = lambda.conj();
    [
        p20 * (-r.ka) - I * sq2 * lc * p11 + s * phi[0] * sq2,
        p11 * (-0.5 * (r.ka + r.kb)) - I * sq2 * lambda * p20 - I * sq2 * lc * p02 - I * r.g * p10e + s * phi[1],
        p02 * (-r.kb) - I * sq2 * lambda * p11 - I * sq2 * r.g * p01e,
        p10e * C64::new(-0.5 * (r.ka + r.ge), -omega) - I * lc * p01e - I * r.g * p11 + s * phi[2],
        p01e * C64::new(-0.5 * (r.kb + r.ge), -omega) - I * lambda * p10e - I * sq2 * r.g * p02,
    ]
}

#[inline]
pub fn mat_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

#[inline]
pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut o = [[ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            o[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    o
}

pub fn identity3() -> Mat3 {
    let one = C64::new(1.0, 0.0);
    [[one, ZERO, ZERO], [ZERO, one, ZERO], [ZERO, ZERO, one]]
}

/// Emitter sign flips per grid index (parity of σ_z kicks landing there).
pub type Kicks = Vec<bool>;

pub fn no_kicks(grid: &TimeGrid) -> Kicks {
    vec![false; grid.len()]
}
