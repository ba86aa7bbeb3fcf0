//! Fundamental matrix of the drive-free one-excitation generator.
//!
//! `M(t_k)` solves dM/dt = A(t)M with M(t0) = 1, and the kernel
//! K(t_n, t_m) = M(t_n)M(t_m)⁻¹ carries an excitation present at t_m to t_n.
//! Its columns are the amplitudes reached from an excitation initially in
//! â, b̂ or the emitter. When M(t_m) is badly conditioned (strong decay) the
//! kernel is rebuilt from the per-interval step matrices instead.

use nalgebra::Matrix3;
use num_complex::Complex64 as C64;

use super::{identity3, mat_mul, Discretization, IntegratorOptions, Kicks, Mat3, ZERO};
use crate::controls::Controls;
use crate::error::Result;
use crate::model::{InputPulse, SystemParams, TimeGrid};

pub const CONDITION_LIMIT: f64 = 1e8;

#[derive(Clone, Debug)]
pub struct Propagator1 {
    pub grid: TimeGrid,
    /// M(t_k) for every grid index.
    pub m: Vec<Mat3>,
    /// Step matrices P_k mapping t_k to t_{k+1}, kicks included.
    pub steps: Vec<Mat3>,
}

fn flip_emitter_rows(p: &mut Mat3) {
    for c in 0..3 {
        p[2][c] = -p[2][c];
    }
}

fn to_na(m: &Mat3) -> Matrix3<C64> {
    Matrix3::from_fn(|i, j| m[i][j])
}

fn from_na(m: &Matrix3<C64>) -> Mat3 {
    let mut o = [[ZERO; 3]; 3];
    for (i, row) in o.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m[(i, j)];
        }
    }
    o
}

/// 2-norm condition number.
pub fn condition_number(m: &Mat3) -> f64 {
    let sv = to_na(m).singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

impl Propagator1 {
    pub fn from_discretization(d: &Discretization, kicks: &Kicks) -> Self {
        let mut steps = d.step_matrices();
        for (k, p) in steps.iter_mut().enumerate() {
            if kicks[k + 1] {
                flip_emitter_rows(p);
            }
        }
        let mut start = identity3();
        if kicks[0] {
            flip_emitter_rows(&mut start);
        }
        let mut m = Vec::with_capacity(d.grid.len());
        m.push(start);
        for p in &steps {
            let next = mat_mul(p, m.last().unwrap());
            m.push(next);
        }
        Propagator1 {
            grid: d.grid,
            m,
            steps,
        }
    }

    /// K(t_n, t_m) for n ≥ m by chaining step matrices.
    pub fn kernel_direct(&self, n: usize, m: usize) -> Mat3 {
        assert!(n >= m, "kernel_direct needs n >= m");
        let mut k = identity3();
        for p in &self.steps[m..n] {
            k = mat_mul(p, &k);
        }
        k
    }

    /// K(t_n, t_m) = M(t_n)M(t_m)⁻¹, falling back to chained steps when M(t_m)
    /// is ill-conditioned.
    pub fn kernel(&self, n: usize, m: usize) -> Mat3 {
        if n == m {
            return identity3();
        }
        let mm = &self.m[m];
        if condition_number(mm) > CONDITION_LIMIT {
            log::debug!("propagator: M(t_{m}) ill-conditioned, chaining steps");
            if n >= m {
                return self.kernel_direct(n, m);
            }
            let inv = to_na(&self.kernel_direct(m, n)).try_inverse().unwrap_or_else(Matrix3::zeros);
            return from_na(&inv);
        }
        let inv = to_na(mm).try_inverse().unwrap_or_else(Matrix3::zeros);
        from_na(&(to_na(&self.m[n]) * inv))
    }

    pub fn is_well_conditioned(&self, m: usize) -> bool {
        condition_number(&self.m[m]) <= CONDITION_LIMIT
    }
}

/// Fundamental matrix for the given controls without kicks.
pub fn build_propagator(
    params: &SystemParams,
    controls: &dyn Controls,
    grid: TimeGrid,
    opts: &IntegratorOptions,
) -> Result<Propagator1> {
    let d = Discretization::new(params, controls, &InputPulse::zero(grid), opts)?;
    Ok(Propagator1::from_discretization(&d, &super::no_kicks(&grid)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controls::{ConstantControls, FnControls};
    use crate::dynamics::analytic::free_evolution_analytic;

    fn max_diff(a: &Mat3, b: &Mat3) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((a[i][j] - b[i][j]).norm());
            }
        }
        d
    }

    fn random_controls() -> impl Controls {
        FnControls {
            omega: |t: f64| 1.5 + 0.8 * (0.9 * t).sin() + 0.3 * (2.3 * t).cos(),
            lambda: |t: f64| C64::new(0.7 * (0.4 * t).cos(), 0.5 * (1.1 * t).sin()),
        }
    }

    fn params() -> SystemParams {
        SystemParams {
            kappa_c: 0.5,
            g: 0.6,
            omega0: 1.0,
            ..SystemParams::reference()
        }
    }

    #[test]
    fn kernel_is_identity_on_diagonal() {
        let g = TimeGrid::new(0.0, 5.0, 200).unwrap();
        let p = build_propagator(&params(), &random_controls(), g, &IntegratorOptions::default()).unwrap();
        assert_eq!(max_diff(&p.kernel(37, 37), &identity3()), 0.0);
    }

    #[test]
    fn composition_holds() {
        let g = TimeGrid::new(0.0, 6.0, 300).unwrap();
        let p = build_propagator(&params(), &random_controls(), g, &IntegratorOptions::default()).unwrap();
        for (a, b, c) in [(0, 100, 300), (20, 150, 280), (5, 6, 7)] {
            let lhs = mat_mul(&p.kernel(c, b), &p.kernel(b, a));
            assert!(max_diff(&lhs, &p.kernel(c, a)) < 1e-8);
            assert!(max_diff(&p.kernel(c, a), &p.kernel_direct(c, a)) < 1e-8);
        }
    }

    #[test]
    fn kernel_matches_direct_integration() {
        let pr = params();
        let c = random_controls();
        let g = TimeGrid::new(0.0, 6.0, 300).unwrap();
        let p = build_propagator(&pr, &c, g, &IntegratorOptions::default()).unwrap();
        // Re-integrate from t_m on a finer, shifted grid.
        let (m, n) = (60usize, 240usize);
        let sub = TimeGrid::new(g.t(m), g.t(n), 4 * (n - m)).unwrap();
        let d = Discretization::new(&pr, &c, &InputPulse::zero(sub), &IntegratorOptions::default()).unwrap();
        let q = Propagator1::from_discretization(&d, &crate::dynamics::no_kicks(&sub));
        assert!(max_diff(&p.kernel(n, m), &q.m[sub.n]) < 1e-8);
    }

    #[test]
    fn lambda_free_block_matches_closed_form() {
        let pr = SystemParams {
            kappa_c: 1.0,
            g: 0.4,
            omega0: 6.0,
            ..SystemParams::reference()
        };
        let c = ConstantControls { omega: 6.0, lambda: ZERO };
        let g = TimeGrid::new(0.0, 10.0, 2000).unwrap();
        let p = build_propagator(&pr, &c, g, &IntegratorOptions::default()).unwrap();
        let (n, m) = (1700, 300);
        let k = p.kernel(n, m);
        let (b, e) = free_evolution_analytic(&pr, 6.0, g.t(n) - g.t(m));
        assert!((k[1][1] - b).norm() < 1e-8);
        assert!((k[2][1] - e).norm() < 1e-8);
    }

    #[test]
    fn strong_decay_uses_fallback() {
        let pr = SystemParams {
            kappa_c: 6.0,
            ..SystemParams::reference()
        };
        let c = ConstantControls { omega: 6.0, lambda: C64::new(0.0, 0.0) };
        let g = TimeGrid::new(0.0, 20.0, 400).unwrap();
        let p = build_propagator(&pr, &c, g, &IntegratorOptions::default()).unwrap();
        assert!(!p.is_well_conditioned(400));
        let k = p.kernel(400, 300);
        assert!(max_diff(&k, &p.kernel_direct(400, 300)) < 1e-14);
    }
}
