//! Brute-force collision model: the waveguide is cut into N time bins of
//! width Δt and each bin meets the cavity once.
//!
//! Every bin is a Strang split: the cavity–emitter system evolves for Δt/2
//! by exact matrix exponential, the bin photon and mode â mix on a beam
//! splitter, then the system evolves another Δt/2. The splitter angle obeys
//! cos θ = e^{−κ_C Δt/2} so that one bin reproduces the exact cavity decay
//! over Δt. The full one- and two-excitation state vectors are kept
//! explicitly, which makes this an independent check on the cascade.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{Vec3, I, ZERO};
use crate::controls::Controls;
use crate::error::{Error, Result};
use crate::model::{InputPulse, SystemParams, TimeGrid};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CollisionOptions {
    /// Largest accepted number of bins.
    pub max_bins: usize,
}

impl Default for CollisionOptions {
    fn default() -> Self {
        CollisionOptions { max_bins: 128 }
    }
}

/// Amplitudes of the collision model, recorded at bin boundaries.
#[derive(Clone, Debug)]
pub struct CollisionResult {
    /// Bin grid: N bins, boundaries t_0..t_N.
    pub bins: TimeGrid,
    /// One-excitation system amplitudes (a, b, e) at each boundary.
    pub psi: Vec<Vec3>,
    /// One-photon output envelope at each bin midpoint.
    pub xi_out: Vec<C64>,
    /// Layer-one amplitudes at each boundary; `None` once no input bins remain.
    pub phi: Vec<Option<Vec3>>,
    /// Layer-two amplitudes (20g, 11g, 02g, 10e, 01e) at each boundary.
    pub psi2: Vec<[C64; 5]>,
    /// Ordered two-time output f(m, k) for m < k at bin midpoints, row-major
    /// N×N with zeros elsewhere.
    pub pair_out: Vec<C64>,
    /// Total probability in the two-excitation sector after the last bin.
    pub norm_two: f64,
    /// Total probability in the one-excitation sector after the last bin.
    pub norm_one: f64,
}

impl CollisionResult {
    pub fn pair(&self, m: usize, k: usize) -> C64 {
        self.pair_out[m * self.bins.n + k]
    }
}

type M3 = SMatrix<C64, 3, 3>;
type M5 = SMatrix<C64, 5, 5>;

fn gen1(p: &SystemParams, omega: f64, lambda: C64) -> M3 {
    let (kl, kb, ge, g) = (p.kappa_l, p.kappa_lb(), p.gamma_e, p.g);
    let mut m = M3::zeros();
    m[(0, 0)] = C64::new(-0.5 * kl, 0.0);
    m[(0, 1)] = -I * lambda.conj();
    m[(1, 0)] = -I * lambda;
    m[(1, 1)] = C64::new(-0.5 * kb, 0.0);
    m[(1, 2)] = -I * g;
    m[(2, 1)] = -I * g;
    m[(2, 2)] = C64::new(-0.5 * ge, -omega);
    m
}

fn gen2(p: &SystemParams, omega: f64, lambda: C64) -> M5 {
    let s2 = std::f64::consts::SQRT_2;
    let (kl, kb, ge, g) = (p.kappa_l, p.kappa_lb(), p.gamma_e, p.g);
    let lc = lambda.conj();
    let mut m = M5::zeros();
    // Order: 20g, 11g, 02g, 10e, 01e.
    m[(0, 0)] = C64::new(-kl, 0.0);
    m[(0, 1)] = -I * s2 * lc;
    m[(1, 0)] = -I * s2 * lambda;
    m[(1, 1)] = C64::new(-0.5 * (kl + kb), 0.0);
    m[(1, 2)] = -I * s2 * lc;
    m[(1, 3)] = -I * g;
    m[(2, 1)] = -I * s2 * lambda;
    m[(2, 2)] = C64::new(-kb, 0.0);
    m[(2, 4)] = -I * s2 * g;
    m[(3, 1)] = -I * g;
    m[(3, 3)] = C64::new(-0.5 * (kl + ge), -omega);
    m[(3, 4)] = -I * lc;
    m[(4, 2)] = -I * s2 * g;
    m[(4, 3)] = -I * lambda;
    m[(4, 4)] = C64::new(-0.5 * (kb + ge), -omega);
    m
}

fn apply3(m: &M3, v: &mut Vec3) {
    let x = m * SVector::<C64, 3>::from_column_slice(v);
    v.copy_from_slice(x.as_slice());
}

fn apply5(m: &M5, v: &mut [C64; 5]) {
    let x = m * SVector::<C64, 5>::from_column_slice(v);
    v.copy_from_slice(x.as_slice());
}

/// Upper-triangular pair storage including the diagonal |2_j⟩.
struct Pairs {
    n: usize,
    v: Vec<C64>,
}

impl Pairs {
    fn idx(&self, j: usize, k: usize) -> usize {
        let (a, b) = if j <= k { (j, k) } else { (k, j) };
        a * self.n + b
    }
    fn get(&self, j: usize, k: usize) -> C64 {
        self.v[self.idx(j, k)]
    }
    fn set(&mut self, j: usize, k: usize, z: C64) {
        let i = self.idx(j, k);
        self.v[i] = z;
    }
}

pub fn oracle_collision_model(
    params: &SystemParams,
    controls: &dyn Controls,
    xi_in: &InputPulse,
    bins: TimeGrid,
    opts: &CollisionOptions,
) -> Result<CollisionResult> {
    params.validate()?;
    bins.validate()?;
    let nb = bins.n;
    if nb > opts.max_bins {
        return Err(Error::SizeLimit {
            what: "collision-model bins",
            value: nb,
            bound: opts.max_bins,
        });
    }
    let dt = bins.dt();
    let mid = |j: usize| bins.t0 + (j as f64 + 0.5) * dt;
    let mut cin: Vec<C64> = (0..nb).map(|j| xi_in.at(mid(j)) * dt.sqrt()).collect();
    let norm: f64 = cin.iter().map(|z| z.norm_sqr()).sum();
    if norm > 0.0 {
        let s = 1.0 / norm.sqrt();
        cin.iter_mut().for_each(|z| *z *= s);
    }

    let c = (-0.5 * params.kappa_c * dt).exp();
    let s = (1.0 - c * c).max(0.0).sqrt();
    let rt2 = std::f64::consts::SQRT_2;

    // One-excitation sector.
    let mut sys1: Vec3 = [ZERO; 3];
    let mut bins1 = cin.clone();
    // Two-excitation sector.
    let mut sys2 = [ZERO; 5];
    let mut sb: Vec<Vec3> = vec![[ZERO; 3]; nb];
    let mut pairs = Pairs {
        n: nb,
        v: vec![ZERO; nb * nb],
    };
    for j in 0..nb {
        pairs.set(j, j, cin[j] * cin[j]);
        for k in j + 1..nb {
            pairs.set(j, k, cin[j] * cin[k] * rt2);
        }
    }

    let project_phi = |sb: &[Vec3], from: usize| -> Option<Vec3> {
        let den: f64 = cin[from..].iter().map(|z| z.norm_sqr()).sum();
        if from >= nb || den <= 1e-300 {
            return None;
        }
        let mut o = [ZERO; 3];
        for j in from..nb {
            for x in 0..3 {
                o[x] += sb[j][x] * cin[j].conj();
            }
        }
        Some(o.map(|z| z / den))
    };

    let mut psi = vec![sys1];
    let mut phi = vec![project_phi(&sb, 0)];
    let mut psi2 = vec![sys2];
    let mut xi_out = Vec::with_capacity(nb);

    let half = |t: f64| {
        let (om, la) = (controls.omega(t), controls.lambda(t));
        ((gen1(params, om, la) * C64::new(0.5 * dt, 0.0)).exp(), (gen2(params, om, la) * C64::new(0.5 * dt, 0.0)).exp())
    };

    for n in 0..nb {
        let (u1, u2) = half(bins.t(n) + 0.25 * dt);
        apply3(&u1, &mut sys1);
        apply5(&u2, &mut sys2);
        sb.iter_mut().for_each(|v| apply3(&u1, v));

        // Beam splitter between â and bin n.
        let (a, w) = (sys1[0], bins1[n]);
        sys1[0] = a * c + w * s;
        bins1[n] = w * c - a * s;

        let (a2, b2, d2) = (sys2[0], sb[n][0], pairs.get(n, n));
        let cs = rt2 * c * s;
        sys2[0] = a2 * (c * c) + b2 * cs + d2 * (s * s);
        sb[n][0] = -a2 * cs + b2 * (c * c - s * s) + d2 * cs;
        pairs.set(n, n, a2 * (s * s) - b2 * cs + d2 * (c * c));

        let (p11, bw) = (sys2[1], sb[n][1]);
        sys2[1] = p11 * c + bw * s;
        sb[n][1] = bw * c - p11 * s;
        let (p10e, ew) = (sys2[3], sb[n][2]);
        sys2[3] = p10e * c + ew * s;
        sb[n][2] = ew * c - p10e * s;
        for j in (0..nb).filter(|&j| j != n) {
            let (aj, pj) = (sb[j][0], pairs.get(n, j));
            sb[j][0] = aj * c + pj * s;
            pairs.set(n, j, pj * c - aj * s);
        }

        let (u1, u2) = half(bins.t(n) + 0.75 * dt);
        apply3(&u1, &mut sys1);
        apply5(&u2, &mut sys2);
        sb.iter_mut().for_each(|v| apply3(&u1, v));

        xi_out.push(bins1[n] / dt.sqrt());
        psi.push(sys1);
        psi2.push(sys2);
        phi.push(project_phi(&sb, n + 1));
    }

    let mut pair_out = vec![ZERO; nb * nb];
    for m in 0..nb {
        for k in m + 1..nb {
            pair_out[m * nb + k] = pairs.get(m, k) / dt;
        }
    }
    let norm_two = sys2.iter().map(|z| z.norm_sqr()).sum::<f64>()
        + sb.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>()
        + (0..nb)
            .flat_map(|j| (j..nb).map(move |k| (j, k)))
            .map(|(j, k)| pairs.get(j, k).norm_sqr())
            .sum::<f64>();
    let norm_one = sys1.iter().map(|z| z.norm_sqr()).sum::<f64>() + bins1.iter().map(|z| z.norm_sqr()).sum::<f64>();

    Ok(CollisionResult {
        bins,
        psi,
        xi_out,
        phi,
        psi2,
        pair_out,
        norm_two,
        norm_one,
    })
}
