//! Side-by-side comparison of the cascade with the collision model.
//!
//! The cascade runs on a grid with 2q points per bin so that every bin
//! boundary and midpoint of the collision model is a grid point.

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::collision::{oracle_collision_model, CollisionOptions};
use super::two::{propagate_two_with, CascadeOptions};
use super::{no_kicks, Discretization, IntegratorOptions};
use crate::controls::Controls;
use crate::error::{Error, Result};
use crate::model::{InputPulse, SystemParams, TimeGrid};

/// Largest deviation per amplitude family.
#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub bins: usize,
    /// ψ_a, ψ_b, ψ_e at bin boundaries.
    pub one_system: f64,
    /// ξ_out⁽¹⁾ at bin midpoints.
    pub one_output: f64,
    /// Layer one at bin boundaries while input remains.
    pub layer_one: f64,
    /// Layer two at bin boundaries.
    pub layer_two: f64,
    /// Ordered two-time output at pairs of bin midpoints.
    pub pair_output: f64,
}

impl OracleReport {
    pub fn max(&self) -> f64 {
        [self.one_system, self.one_output, self.layer_one, self.layer_two, self.pair_output]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Builds the input pulse on a given grid.
pub type PulseFactory<'a> = &'a dyn Fn(TimeGrid) -> Result<InputPulse>;

/// Compare both sectors at `bins` bins, using `q` cascade intervals per half bin.
pub fn compare_with_collision(
    params: &SystemParams,
    controls: &dyn Controls,
    pulse: PulseFactory<'_>,
    bins: TimeGrid,
    q: usize,
    opts: &IntegratorOptions,
) -> Result<OracleReport> {
    if q == 0 {
        return Err(Error::invalid("q must be >= 1"));
    }
    let nb = bins.n;
    let fine = TimeGrid::new(bins.t0, bins.t_end, 2 * q * nb)?;
    let input = pulse(fine)?;
    let d = Discretization::new(params, controls, &input, opts)?;
    let two = propagate_two_with(&d, &no_kicks(&fine), None, &CascadeOptions::default())?;
    let col = oracle_collision_model(params, controls, &input, bins, &CollisionOptions { max_bins: nb.max(128) })?;
    let xo2 = two.xi_out2.as_ref().ok_or_else(|| Error::Dependency("dense two-time output missing".into()))?;

    let boundary = |j: usize| 2 * q * j;
    let mid = |j: usize| 2 * q * j + q;
    let dev3 = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);

    let mut r = OracleReport {
        bins: nb,
        one_system: 0.0,
        one_output: 0.0,
        layer_one: 0.0,
        layer_two: 0.0,
        pair_output: 0.0,
    };
    for j in 0..=nb {
        let i = boundary(j);
        r.one_system = r.one_system.max(dev3(&col.psi[j], &two.one.state(i)));
        if let Some(phi) = col.phi[j] {
            let cas = [two.layers.phi[0][i], two.layers.phi[1][i], two.layers.phi[2][i]];
            r.layer_one = r.layer_one.max(dev3(&phi, &cas));
        }
        let cas2: Vec<C64> = (0..5).map(|x| two.layers.psi[x][i]).collect();
        r.layer_two = r.layer_two.max(dev3(&col.psi2[j], &cas2));
    }
    for j in 0..nb {
        r.one_output = r.one_output.max((col.xi_out[j] - two.one.xi_out.amp[mid(j)]).norm());
        for k in j + 1..nb {
            let f = xo2.get(mid(j), mid(k)) * std::f64::consts::SQRT_2;
            r.pair_output = r.pair_output.max((col.pair(j, k) - f).norm());
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controls::FnControls;

    fn scenario() -> (SystemParams, impl Controls) {
        let p = SystemParams {
            kappa_c: 1.0,
            g: 0.5,
            omega0: 1.0,
            ..SystemParams::reference()
        };
        let c = FnControls {
            omega: |t: f64| 1.0 + 0.5 * (0.8 * t).sin(),
            lambda: |t: f64| C64::from_polar(0.6 * (-(t - 2.5f64).powi(2) / 8.0).exp(), 0.2 * t),
        };
        (p, c)
    }

    fn pulse(g: TimeGrid) -> Result<InputPulse> {
        InputPulse::gaussian(g, 1.5, 2.5)
    }

    #[test]
    fn deviation_shrinks_with_bins() {
        let (p, c) = scenario();
        let opts = IntegratorOptions {
            step_rate: 0.001,
            ..IntegratorOptions::default()
        };
        let mut errs = Vec::new();
        for nb in [20usize, 40, 80] {
            let bins = TimeGrid::new(0.0, 5.0, nb).unwrap();
            let r = compare_with_collision(&p, &c, &pulse, bins, 1, &opts).unwrap();
            errs.push(r);
        }
        for w in errs.windows(2) {
            assert!(w[1].max() < w[0].max(), "{errs:?}");
        }
        assert!(errs[1].max() < 1e-3, "{:?}", errs);
    }
}
