//! Two-excitation sector and the two-time output cascade.
//!
//! Layer one holds one excitation inside the system while the second photon
//! is still incoming; it obeys the one-excitation equations with drive
//! √2·√κ_C·ξ. Layer two holds both excitations inside and is sourced by ξ
//! times layer one. A photon leaving at t_m either leaves the other one
//! incoming (amplitude e₁(t_m)) or leaves one excitation behind in the
//! system (seed r(t_m)). The later evolution from t_m is a driven
//! one-excitation problem, solved exactly as e₁·ψ⁽¹⁾ plus a drive-free
//! residual carried by the step matrices, so the two-time output
//! f(t_m, t_k) = e₁ ξ_out⁽¹⁾(t_k) − √κ_C v_a(t_k) needs O(N²) work overall.

use std::f64::consts::SQRT_2;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::one::{propagate_one_from, OneExcitationState};
use super::propagator::Propagator1;
use super::{mat_vec, one_rhs, two_rhs, Discretization, IntegratorOptions, Kicks, Vec3, ZERO};
use crate::controls::Controls;
use crate::error::{Error, Result};
use crate::model::{InputPulse, SystemParams, TimeGrid, WavePacket1, WavePacket2};
use crate::quadrature::{prefix_sums, segment, segment_weight};

/// What the cascade should produce.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeOptions {
    /// Store the dense two-time output packet.
    #[serde(default = "yes")]
    pub dense: bool,
    /// Accumulate the integrals behind the nine-term probability budget.
    #[serde(default)]
    pub budget: bool,
    /// Largest number of two-time samples stored densely; beyond it only the
    /// streaming accumulators run.
    #[serde(default = "default_dense_cap")]
    pub dense_cap: usize,
    /// Rows of the cascade handled per parallel task.
    #[serde(default = "default_chunk")]
    pub chunk: usize,
}

fn yes() -> bool {
    true
}
fn default_dense_cap() -> usize {
    16 * 1024 * 1024
}
fn default_chunk() -> usize {
    16
}

impl Default for CascadeOptions {
    fn default() -> Self {
        CascadeOptions {
            dense: true,
            budget: false,
            dense_cap: default_dense_cap(),
            chunk: default_chunk(),
        }
    }
}

impl CascadeOptions {
    pub fn streaming() -> Self {
        CascadeOptions {
            dense: false,
            ..Default::default()
        }
    }
}

/// Layer-one and layer-two amplitudes on the grid.
#[derive(Clone, Debug)]
pub struct Layers {
    /// φ_a, φ_b, φ_e: one excitation inside, one photon incoming.
    pub phi: [Vec<C64>; 3],
    /// ψ_20g, ψ_11g, ψ_02g, ψ_10e, ψ_01e.
    pub psi: [Vec<C64>; 5],
}

/// Overlap of the two-photon output with the symmetric product μ(t)μ(t').
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairOverlap {
    pub amplitude: C64,
    /// ∬|ξ_out(t, t')|² over the full square.
    pub norm: f64,
}

/// Integrals needed for the probability budget at every grid index n.
#[derive(Clone, Debug)]
pub struct BudgetSums {
    /// ∫_{t0}^{t_n} |y_x(t_n; t_m)|² dt_m for x = a, b, e.
    pub residual: [Vec<f64>; 3],
    /// ∫_{t0}^{t_n} dt_m ∫_{t_m}^{t_n} |f(t_m, t)|² dt.
    pub pair: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct TwoExcitationState {
    pub grid: TimeGrid,
    /// Input envelope on the grid.
    pub xi_in: WavePacket1,
    pub layers: Layers,
    /// Amplitude that a photon leaves at t_m while the other is still incoming.
    pub e1: Vec<C64>,
    /// System state left behind when a photon leaves at t_m.
    pub seed: Vec<Vec3>,
    /// Single-photon solution driven by ξ with the same controls and kicks.
    pub one: OneExcitationState,
    pub xi_out2: Option<WavePacket2>,
    pub target_overlap: Option<PairOverlap>,
    pub budget: Option<BudgetSums>,
    /// Two-excitation probability with at least one excitation still inside
    /// the system at t_N.
    pub retained: f64,
}

/// Layer one and layer two, integrated jointly.
pub fn propagate_layers(d: &Discretization, kicks: &Kicks) -> Layers {
    let r = d.rates;
    let f = |j: usize, y: &[C64; 8]| {
        let (om, la, xi) = d.at(j);
        let s = xi * r.sqrt_kc;
        let phi = [y[0], y[1], y[2]];
        let p1 = one_rhs(&r, om, la, s * SQRT_2, &phi);
        let p2 = two_rhs(&r, om, la, s, &phi, &[y[3], y[4], y[5], y[6], y[7]]);
        [p1[0], p1[1], p1[2], p2[0], p2[1], p2[2], p2[3], p2[4]]
    };
    let n = d.grid.len();
    let mut out: [Vec<C64>; 8] = Default::default();
    out.iter_mut().for_each(|v| v.reserve(n));
    let mut y = [ZERO; 8];
    let flip = |y: &mut [C64; 8]| {
        for i in [2, 6, 7] {
            y[i] = -y[i];
        }
    };
    if kicks[0] {
        flip(&mut y);
    }
    for (i, v) in out.iter_mut().enumerate() {
        v.push(y[i]);
    }
    for k in 0..d.grid.n {
        d.advance(k, &mut y, &f);
        if kicks[k + 1] {
            flip(&mut y);
        }
        for (i, v) in out.iter_mut().enumerate() {
            v.push(y[i]);
        }
    }
    let [a, b, e, p20, p11, p02, p10e, p01e] = out;
    Layers {
        phi: [a, b, e],
        psi: [p20, p11, p02, p10e, p01e],
    }
}

struct ChunkOut {
    residual: [Vec<f64>; 3],
    pair: Vec<f64>,
    rows: Vec<Vec<C64>>,
    overlap: C64,
    norm: f64,
    retained: f64,
}

/// Integral over points lo..=hi of complex values by the rule of `segment`.
fn segment_c(values: &[C64], lo: usize, hi: usize, dt: f64) -> C64 {
    (lo..=hi)
        .map(|i| values[i] * segment_weight(i - lo, hi - lo, dt))
        .sum()
}

fn segment_r(values: &[f64], lo: usize, hi: usize, dt: f64) -> f64 {
    (lo..=hi)
        .map(|i| values[i] * segment_weight(i - lo, hi - lo, dt))
        .sum()
}

/// Run the cascade given the one-photon solution and layers.
pub fn cascade(
    d: &Discretization,
    prop: &Propagator1,
    one: &OneExcitationState,
    layers: &Layers,
    target: Option<&WavePacket1>,
    opts: &CascadeOptions,
) -> Result<TwoExcitationState> {
    let grid = d.grid;
    let n = grid.len();
    let last = n - 1;
    let dt = grid.dt();
    let sk = d.rates.sqrt_kc;
    if let Some(t) = target {
        grid.check_same(&t.grid)?;
    }
    let xi = &d.xi_grid;
    let e1: Vec<C64> = (0..n).map(|m| xi[m] * SQRT_2 - layers.phi[0][m] * sk).collect();
    let seed: Vec<Vec3> = (0..n)
        .map(|m| {
            let [p20, p11, _, p10e, _] = [
                layers.psi[0][m],
                layers.psi[1][m],
                layers.psi[2][m],
                layers.psi[3][m],
                layers.psi[4][m],
            ];
            [
                xi[m] * layers.phi[0][m] - p20 * (SQRT_2 * sk),
                xi[m] * layers.phi[1][m] - p11 * sk,
                xi[m] * layers.phi[2][m] - p10e * sk,
            ]
        })
        .collect();
    let dense = opts.dense && n.saturating_mul(n) <= opts.dense_cap;
    if opts.dense && !dense {
        log::info!("two-time output has {} samples, above the dense cap; streaming only", n * n);
    }
    let mu_conj: Option<Vec<C64>> = target.map(|t| t.amp.iter().map(|z| z.conj()).collect());
    let xo = &one.xi_out.amp;
    let chunk = opts.chunk.max(1);
    let starts: Vec<usize> = (0..n).step_by(chunk).collect();

    let parts: Vec<ChunkOut> = starts
        .par_iter()
        .map(|&m0| {
            let m1 = (m0 + chunk).min(n);
            let mut out = ChunkOut {
                residual: if opts.budget { [vec![0.0; n], vec![0.0; n], vec![0.0; n]] } else { Default::default() },
                pair: if opts.budget { vec![0.0; n] } else { Vec::new() },
                rows: Vec::new(),
                overlap: ZERO,
                norm: 0.0,
                retained: 0.0,
            };
            let mut f = vec![ZERO; n];
            let mut f2 = vec![0.0; n];
            let mut g = vec![ZERO; n];
            for m in m0..m1 {
                let psi1 = one.state(m);
                let mut v = [
                    seed[m][0] - e1[m] * psi1[0],
                    seed[m][1] - e1[m] * psi1[1],
                    seed[m][2] - e1[m] * psi1[2],
                ];
                for k in m..n {
                    if k > m {
                        v = mat_vec(&prop.steps[k - 1], &v);
                    }
                    let fk = e1[m] * xo[k] - v[0] * sk;
                    f[k] = fk;
                    f2[k] = fk.norm_sqr();
                    if opts.budget {
                        let w = segment_weight(m, k, dt);
                        let ps = one.state(k);
                        for x in 0..3 {
                            out.residual[x][k] += w * (v[x] + e1[m] * ps[x]).norm_sqr();
                        }
                    }
                }
                if opts.budget {
                    // Inner integral ∫_{t_m}^{t_k}|f|² for every k via prefix sums.
                    let prefix = prefix_sums(&f2[m..]);
                    let tail = &f2[m..];
                    for k in m..n {
                        let w = segment_weight(m, k, dt);
                        out.pair[k] += w * segment(tail, &prefix, 0, k - m, dt);
                    }
                }
                let w_out = segment_weight(m, last, dt);
                let ps = one.state(last);
                out.retained += w_out * (0..3).map(|x| (v[x] + e1[m] * ps[x]).norm_sqr()).sum::<f64>();
                out.norm += w_out * segment_r(&f2, m, last, dt);
                if let Some(mc) = &mu_conj {
                    for k in m..n {
                        g[k] = f[k] * mc[k];
                    }
                    out.overlap += mc[m] * w_out * segment_c(&g, m, last, dt);
                }
                if dense {
                    out.rows.push(f[m..].iter().map(|z| z / SQRT_2).collect());
                }
            }
            out
        })
        .collect();

    let mut residual: [Vec<f64>; 3] = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut pair = vec![0.0; n];
    let mut rows = Vec::with_capacity(if dense { n } else { 0 });
    let mut overlap = ZERO;
    let mut norm = 0.0;
    let mut retained: f64 = layers.psi.iter().map(|p| p[last].norm_sqr()).sum();
    for p in parts {
        if opts.budget {
            for x in 0..3 {
                residual[x].iter_mut().zip(&p.residual[x]).for_each(|(a, b)| *a += b);
            }
            pair.iter_mut().zip(&p.pair).for_each(|(a, b)| *a += b);
        }
        rows.extend(p.rows);
        overlap += p.overlap;
        norm += p.norm;
        retained += p.retained;
    }
    let xi_out2 = if dense {
        Some(WavePacket2::from_upper_rows(grid, &rows)?)
    } else {
        None
    };
    if !norm.is_finite() {
        return Err(Error::Diverged { t: grid.t_end, excess: norm });
    }
    Ok(TwoExcitationState {
        grid,
        xi_in: WavePacket1::new(grid, d.xi_grid.clone())?,
        layers: layers.clone(),
        e1,
        seed,
        one: one.clone(),
        xi_out2,
        target_overlap: mu_conj.map(|_| PairOverlap {
            amplitude: overlap * SQRT_2,
            norm,
        }),
        budget: opts.budget.then_some(BudgetSums { residual, pair }),
        retained,
    })
}

/// Full two-photon run with optional target overlap.
pub fn propagate_two_with(
    d: &Discretization,
    kicks: &Kicks,
    target: Option<&WavePacket1>,
    opts: &CascadeOptions,
) -> Result<TwoExcitationState> {
    let one = propagate_one_from(d, [ZERO; 3], kicks)?;
    let prop = Propagator1::from_discretization(d, kicks);
    let layers = propagate_layers(d, kicks);
    cascade(d, &prop, &one, &layers, target, opts)
}

pub fn propagate_two(
    params: &SystemParams,
    controls: &dyn Controls,
    xi_in: &InputPulse,
    opts: &IntegratorOptions,
    cascade_opts: &CascadeOptions,
) -> Result<TwoExcitationState> {
    let d = Discretization::new(params, controls, xi_in, opts)?;
    propagate_two_with(&d, &super::no_kicks(&d.grid), None, cascade_opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controls::FnControls;
    use crate::model::overlap2;

    fn params(g: f64) -> SystemParams {
        SystemParams {
            kappa_c: 1.0,
            g,
            omega0: 1.0,
            ..SystemParams::reference()
        }
    }

    fn run(g: f64, pulse: &InputPulse, target: Option<&WavePacket1>, opts: &CascadeOptions) -> TwoExcitationState {
        let c = FnControls {
            omega: |t: f64| 1.0 + 0.5 * (0.8 * t).sin(),
            lambda: |t: f64| C64::from_polar(0.6 * (-(t - 2.5f64).powi(2) / 8.0).exp(), 0.2 * t),
        };
        let io = IntegratorOptions {
            step_rate: 0.001,
            ..IntegratorOptions::default()
        };
        let d = Discretization::new(&params(g), &c, pulse, &io).unwrap();
        propagate_two_with(&d, &super::super::no_kicks(&d.grid), target, opts).unwrap()
    }

    fn grid() -> TimeGrid {
        TimeGrid::new(0.0, 12.0, 1200).unwrap()
    }

    #[test]
    fn no_input_leaves_everything_empty() {
        let s = run(0.5, &InputPulse::zero(grid()), None, &CascadeOptions::default());
        assert!(s.layers.phi.iter().chain(s.layers.psi.iter()).flatten().all(|z| z.norm() == 0.0));
        assert!(s.xi_out2.unwrap().as_slice().iter().all(|z| z.norm() == 0.0));
        assert_eq!(s.retained, 0.0);
    }

    #[test]
    fn without_emitter_the_output_factorizes() {
        let pulse = InputPulse::gaussian(grid(), 1.5, 4.5).unwrap();
        let s = run(0.0, &pulse, None, &CascadeOptions::default());
        let two = s.xi_out2.as_ref().unwrap();
        let prod = WavePacket2::symmetric_product(&s.one.xi_out, &s.one.xi_out, 0.5).unwrap();
        let dev = two.as_slice().iter().zip(prod.as_slice()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(dev < 1e-6, "max deviation {dev}");
    }

    #[test]
    fn streaming_overlap_matches_dense_packet() {
        let pulse = InputPulse::gaussian(grid(), 1.5, 4.5).unwrap();
        let target = pulse.packet().mirrored(7.0);
        let s = run(0.5, &pulse, Some(&target), &CascadeOptions::default());
        let dense = overlap2(s.xi_out2.as_ref().unwrap(), &target).unwrap();
        let streamed = s.target_overlap.unwrap();
        assert!((dense - streamed.amplitude).norm() < 1e-4, "{dense} vs {}", streamed.amplitude);
        assert!((s.xi_out2.as_ref().unwrap().norm_sq() - streamed.norm).abs() < 1e-4);
        let only = run(0.5, &pulse, Some(&target), &CascadeOptions::streaming());
        assert!(only.xi_out2.is_none());
        assert_eq!(only.target_overlap, s.target_overlap);
    }

    #[test]
    fn lossless_released_plus_retained_is_one() {
        let pulse = InputPulse::gaussian(grid(), 1.5, 4.5).unwrap();
        let target = pulse.packet().clone();
        let s = run(0.5, &pulse, Some(&target), &CascadeOptions::streaming());
        let total = s.target_overlap.unwrap().norm + s.retained;
        assert!(s.retained > 1e-4);
        assert!((total - 1.0).abs() < 1e-5, "{total}");
    }
}
