//! Physical parameters, the uniform time grid, wave-packet containers and
//! overlap algebra.
//!
//! All rates are dimensionless in units of the spectral width Ω_G of the
//! input pulse; times are in units of 1/Ω_G.

use std::f64::consts::{LN_2, PI};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{trapezoid, trapezoid_weight};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Rates and detunings on a common frequency scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// Waveguide–cavity coupling κ_C.
    pub kappa_c: f64,
    /// Intrinsic loss of the waveguide-coupled mode â.
    #[serde(default)]
    pub kappa_l: f64,
    /// Intrinsic loss of the storage mode b̂; `None` means equal to `kappa_l`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_l_b: Option<f64>,
    /// Emitter decay into non-guided modes γ_e.
    #[serde(default)]
    pub gamma_e: f64,
    /// Emitter pure dephasing γ_dp.
    #[serde(default)]
    pub gamma_dp: f64,
    /// Emitter–cavity coupling g.
    pub g: f64,
    /// Off-state emitter–cavity detuning Ω₀.
    pub omega0: f64,
    /// Pump detuning δ_Λ of the loading field.
    #[serde(default)]
    pub delta_lambda: f64,
}

impl SystemParams {
    /// κ_C = 6, g = 0.4, Ω₀ = 15g, lossless.
    pub fn reference() -> Self {
        SystemParams {
            kappa_c: 6.0,
            kappa_l: 0.0,
            kappa_l_b: None,
            gamma_e: 0.0,
            gamma_dp: 0.0,
            g: 0.4,
            omega0: 15.0 * 0.4,
            delta_lambda: 0.0,
        }
    }

    pub fn kappa_lb(&self) -> f64 {
        self.kappa_l_b.unwrap_or(self.kappa_l)
    }

    pub fn is_lossless(&self) -> bool {
        self.kappa_l == 0.0 && self.kappa_lb() == 0.0 && self.gamma_e == 0.0
    }

    /// Rates must be finite and non-negative. `g = 0` is accepted so the
    /// decoupled-emitter limit can be simulated.
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("kappa_c", self.kappa_c),
            ("kappa_l", self.kappa_l),
            ("kappa_l_b", self.kappa_lb()),
            ("gamma_e", self.gamma_e),
            ("gamma_dp", self.gamma_dp),
            ("g", self.g),
        ];
        for (name, v) in rates {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        for (name, v) in [("omega0", self.omega0), ("delta_lambda", self.delta_lambda)] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Largest rate appearing in the drive-free generator, ignoring Λ.
    pub fn max_rate(&self) -> f64 {
        [
            self.kappa_c + self.kappa_l,
            self.kappa_lb(),
            self.gamma_e,
            self.g,
            self.omega0.abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Uniform grid of `n` bins on `[t0, t_end]`, i.e. `n + 1` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t0: f64,
    pub t_end: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_end: f64, n: usize) -> Result<Self> {
        let g = TimeGrid { t0, t_end, n };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid(format!("grid needs at least 2 bins, got {}", self.n)));
        }
        if !(self.t0.is_finite() && self.t_end.is_finite()) || self.t_end <= self.t0 {
            return Err(Error::invalid(format!(
                "grid end {} must exceed start {}",
                self.t_end, self.t0
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        (self.t_end - self.t0) / self.n as f64
    }

    /// Number of grid points, `n + 1`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n + 1
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn t(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.t(i)).collect()
    }

    /// Nearest grid index to `t`, clamped into the grid.
    pub fn nearest(&self, t: f64) -> usize {
        let x = ((t - self.t0) / self.dt()).round();
        if x <= 0.0 {
            0
        } else {
            (x as usize).min(self.n)
        }
    }

    /// Same grid with twice as many bins.
    pub fn halved(&self) -> Self {
        TimeGrid { n: 2 * self.n, ..*self }
    }

    pub fn check_same(&self, other: &TimeGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Input pulse centre and interaction window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateWindow {
    /// End of loading and start of the interaction stage.
    pub t_in: f64,
    /// Interaction duration T.
    pub t_gate: f64,
}

impl GateWindow {
    /// T_in = 4.3/g, T = 7/g.
    pub fn reference(g: f64) -> Self {
        GateWindow {
            t_in: 4.3 / g,
            t_gate: 7.0 / g,
        }
    }

    pub fn validate(&self, grid: &TimeGrid) -> Result<()> {
        let (a, b, c, d) = (grid.t0, self.t_in, self.t_in + self.t_gate, grid.t_end);
        if !(a < b && b < c && c < d) {
            return Err(Error::invalid(format!(
                "need t0 < T_in < T_in + T < tN, got {a} < {b} < {c} < {d}"
            )));
        }
        Ok(())
    }

    /// Time at which the emission stage mirrors the loading stage.
    pub fn mirror_axis(&self) -> f64 {
        2.0 * self.t_in + self.t_gate
    }
}

/// One-time complex envelope on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct WavePacket1 {
    pub grid: TimeGrid,
    pub amp: Vec<C64>,
    pub normalized: bool,
}

impl WavePacket1 {
    pub fn new(grid: TimeGrid, amp: Vec<C64>) -> Result<Self> {
        if amp.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "packet has {} samples, grid has {}",
                amp.len(),
                grid.len()
            )));
        }
        Ok(WavePacket1 {
            grid,
            amp,
            normalized: false,
        })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        WavePacket1 {
            grid,
            amp: vec![ZERO; grid.len()],
            normalized: false,
        }
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> C64) -> Self {
        WavePacket1 {
            grid,
            amp: grid.times().into_iter().map(f).collect(),
            normalized: false,
        }
    }

    pub fn norm_sq(&self) -> f64 {
        let v: Vec<f64> = self.amp.iter().map(|z| z.norm_sqr()).collect();
        trapezoid(&v, self.grid.dt())
    }

    /// Rescale to unit trapezoid norm.
    pub fn normalize(mut self) -> Result<Self> {
        let n = self.norm_sq();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::invalid("cannot normalize a packet with zero norm"));
        }
        let s = 1.0 / n.sqrt();
        self.amp.iter_mut().for_each(|z| *z *= s);
        self.normalized = true;
        Ok(self)
    }

    /// Packet reflected about `axis`, `t ↦ axis − t`, sampled on the same grid
    /// by linear interpolation; zero outside the original support.
    pub fn mirrored(&self, axis: f64) -> Self {
        let g = self.grid;
        let amp = g
            .times()
            .into_iter()
            .map(|t| interp_linear(&g, &self.amp, axis - t))
            .collect();
        WavePacket1 {
            grid: g,
            amp,
            normalized: false,
        }
    }
}

fn interp_linear(grid: &TimeGrid, v: &[C64], t: f64) -> C64 {
    let x = (t - grid.t0) / grid.dt();
    if x < -1e-9 || x > grid.n as f64 + 1e-9 {
        return ZERO;
    }
    let x = x.clamp(0.0, grid.n as f64);
    let i = (x.floor() as usize).min(grid.n - 1);
    let f = x - i as f64;
    v[i] * (1.0 - f) + v[i + 1] * f
}

/// Two-time envelope ξ(t_m, t_n), stored densely and symmetric under exchange.
#[derive(Clone, Debug, PartialEq)]
pub struct WavePacket2 {
    pub grid: TimeGrid,
    amp: Vec<C64>,
}

impl WavePacket2 {
    /// Build from a function evaluated on `m ≤ n`; the lower triangle is
    /// filled by exchange.
    pub fn from_upper(grid: TimeGrid, f: impl Fn(usize, usize) -> C64) -> Self {
        let n = grid.len();
        let mut amp = vec![ZERO; n * n];
        for m in 0..n {
            for k in m..n {
                let v = f(m, k);
                amp[m * n + k] = v;
                amp[k * n + m] = v;
            }
        }
        WavePacket2 { grid, amp }
    }

    /// Build from row-major upper-triangle rows: `rows[m][k - m]` holds the
    /// value at `(m, k)` for `k ≥ m`.
    pub fn from_upper_rows(grid: TimeGrid, rows: &[Vec<C64>]) -> Result<Self> {
        let n = grid.len();
        if rows.len() != n || rows.iter().enumerate().any(|(m, r)| r.len() != n - m) {
            return Err(Error::GridMismatch("upper-triangle rows do not match grid".into()));
        }
        Ok(Self::from_upper(grid, |m, k| rows[m][k - m]))
    }

    /// Build from a dense row-major matrix, symmetrizing as (A + Aᵀ)/2.
    pub fn from_dense(grid: TimeGrid, dense: Vec<C64>) -> Result<Self> {
        let n = grid.len();
        if dense.len() != n * n {
            return Err(Error::GridMismatch(format!(
                "dense packet has {} entries, expected {}",
                dense.len(),
                n * n
            )));
        }
        Ok(Self::from_upper(grid, |m, k| 0.5 * (dense[m * n + k] + dense[k * n + m])))
    }

    /// Symmetric product μ(t_m)ν(t_n) + ν(t_m)μ(t_n), scaled by `scale`.
    pub fn symmetric_product(a: &WavePacket1, b: &WavePacket1, scale: f64) -> Result<Self> {
        a.grid.check_same(&b.grid)?;
        Ok(Self::from_upper(a.grid, |m, k| {
            (a.amp[m] * b.amp[k] + b.amp[m] * a.amp[k]) * scale
        }))
    }

    #[inline]
    pub fn get(&self, m: usize, k: usize) -> C64 {
        self.amp[m * self.grid.len() + k]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.amp
    }

    pub fn norm_sq(&self) -> f64 {
        let n = self.grid.len();
        let dt = self.grid.dt();
        let mut s = 0.0;
        for m in 0..n {
            let wm = trapezoid_weight(m, n, dt);
            for k in 0..n {
                s += wm * trapezoid_weight(k, n, dt) * self.amp[m * n + k].norm_sqr();
            }
        }
        s
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.grid.len();
        (0..n).all(|m| (0..m).all(|k| self.amp[m * n + k] == self.amp[k * n + m]))
    }
}

/// Pulse shape evaluable at arbitrary times (RK4 stages need off-grid values).
#[derive(Clone, Debug)]
enum Shape {
    Zero,
    Gaussian { tau: f64, center: f64 },
    /// Catmull–Rom interpolation of grid samples.
    Tabulated { samples: Arc<Vec<C64>>, cumulative: Arc<Vec<f64>> },
}

/// An input envelope with its grid samples and a continuous-time evaluator.
#[derive(Clone, Debug)]
pub struct InputPulse {
    shape: Shape,
    /// Multiplies the closed form so the grid samples have unit trapezoid norm.
    scale: f64,
    packet: WavePacket1,
}

/// Closed-form Gaussian ξ(t) = √(2/τ)(ln2/π)^{1/4} exp(−2 ln2 (t−c)²/τ²),
/// whose intensity |ξ|² has FWHM τ and unit area.
pub fn gaussian_envelope(t: f64, tau: f64, center: f64) -> f64 {
    let x = t - center;
    (2.0 / tau).sqrt() * (LN_2 / PI).powf(0.25) * (-2.0 * LN_2 * x * x / (tau * tau)).exp()
}

/// Sampled, renormalized Gaussian input centred at `center`.
pub fn make_gaussian_input(grid: TimeGrid, tau_g: f64, center: f64) -> Result<WavePacket1> {
    Ok(InputPulse::gaussian(grid, tau_g, center)?.packet)
}

impl InputPulse {
    pub fn gaussian(grid: TimeGrid, tau_g: f64, center: f64) -> Result<Self> {
        grid.validate()?;
        if !(tau_g > 0.0 && tau_g.is_finite()) {
            return Err(Error::invalid(format!("tau_G must be > 0, got {tau_g}")));
        }
        if !center.is_finite() {
            return Err(Error::invalid("pulse centre must be finite"));
        }
        if grid.dt() > tau_g / 4.0 {
            return Err(Error::Resolution(format!(
                "dt = {} exceeds tau_G/4 = {}",
                grid.dt(),
                tau_g / 4.0
            )));
        }
        // Standard deviation of the amplitude envelope.
        let sigma = tau_g / (2.0 * LN_2.sqrt());
        if center - grid.t0 < 3.0 * sigma || grid.t_end - center < 3.0 * sigma {
            log::warn!(
                "pulse centre {center} is closer than 3 amplitude standard deviations ({}) to the grid edge [{}, {}]",
                3.0 * sigma,
                grid.t0,
                grid.t_end
            );
        }
        let raw = WavePacket1::from_fn(grid, |t| C64::new(gaussian_envelope(t, tau_g, center), 0.0));
        let norm = raw.norm_sq();
        if norm <= 0.0 {
            return Err(Error::invalid("Gaussian has no weight on the grid"));
        }
        let scale = 1.0 / norm.sqrt();
        let packet = raw.normalize()?;
        Ok(InputPulse {
            shape: Shape::Gaussian { tau: tau_g, center },
            scale,
            packet,
        })
    }

    /// Identically zero input.
    pub fn zero(grid: TimeGrid) -> Self {
        InputPulse {
            shape: Shape::Zero,
            scale: 1.0,
            packet: WavePacket1::zeros(grid),
        }
    }

    /// User-supplied envelope; interpolated between samples, not renormalized.
    pub fn tabulated(packet: WavePacket1) -> Self {
        let samples = Arc::new(packet.amp.clone());
        let g = packet.grid;
        // Cumulative energy on a refined grid of the interpolant.
        const REFINE: usize = 8;
        let h = g.dt() / REFINE as f64;
        let mut cumulative = Vec::with_capacity(g.len());
        cumulative.push(0.0);
        let mut acc = 0.0;
        let mut prev = catmull_rom(&samples, &g, g.t0).norm_sqr();
        for i in 0..g.n {
            for j in 1..=REFINE {
                let t = g.t(i) + j as f64 * h;
                let cur = catmull_rom(&samples, &g, t).norm_sqr();
                acc += 0.5 * h * (prev + cur);
                prev = cur;
            }
            cumulative.push(acc);
        }
        InputPulse {
            shape: Shape::Tabulated {
                samples,
                cumulative: Arc::new(cumulative),
            },
            scale: 1.0,
            packet,
        }
    }

    pub fn packet(&self) -> &WavePacket1 {
        &self.packet
    }

    pub fn grid(&self) -> TimeGrid {
        self.packet.grid
    }

    /// ξ(t) at an arbitrary time; zero outside the grid for tabulated input.
    pub fn at(&self, t: f64) -> C64 {
        match &self.shape {
            Shape::Zero => ZERO,
            Shape::Gaussian { tau, center } => {
                C64::new(self.scale * gaussian_envelope(t, *tau, *center), 0.0)
            }
            Shape::Tabulated { samples, .. } => catmull_rom(samples, &self.packet.grid, t),
        }
    }

    /// (|ξ(t)|, d|ξ|/dt).
    pub fn abs_and_slope(&self, t: f64) -> (f64, f64) {
        match &self.shape {
            Shape::Zero => (0.0, 0.0),
            Shape::Gaussian { tau, center } => {
                let v = self.scale * gaussian_envelope(t, *tau, *center);
                (v, -4.0 * LN_2 * (t - center) / (tau * tau) * v)
            }
            Shape::Tabulated { .. } => {
                let h = 1e-4 * self.packet.grid.dt();
                let a = self.at(t).norm();
                let d = (self.at(t + h).norm() - self.at(t - h).norm()) / (2.0 * h);
                (a, d)
            }
        }
    }

    /// ∫_{t0}^{t} |ξ|² with t0 the grid start.
    pub fn energy_before(&self, t: f64) -> f64 {
        let g = self.packet.grid;
        let t = t.clamp(g.t0, g.t_end);
        match &self.shape {
            Shape::Zero => 0.0,
            Shape::Gaussian { tau, center } => {
                let s = (4.0 * LN_2).sqrt() / tau;
                0.5 * self.scale * self.scale * (libm::erf(s * (t - center)) - libm::erf(s * (g.t0 - center)))
            }
            Shape::Tabulated { cumulative, .. } => {
                let x = (t - g.t0) / g.dt();
                let i = (x.floor() as usize).min(g.n - 1);
                let f = x - i as f64;
                cumulative[i] * (1.0 - f) + cumulative[i + 1] * f
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.shape, Shape::Zero) || self.packet.amp.iter().all(|z| *z == ZERO)
    }
}

fn catmull_rom(v: &[C64], g: &TimeGrid, t: f64) -> C64 {
    let x = (t - g.t0) / g.dt();
    if x < -1e-9 || x > g.n as f64 + 1e-9 {
        return ZERO;
    }
    let x = x.clamp(0.0, g.n as f64);
    let i = (x.floor() as usize).min(g.n - 1);
    let f = x - i as f64;
    let p1 = v[i];
    let p2 = v[i + 1];
    let p0 = if i == 0 { 2.0 * p1 - p2 } else { v[i - 1] };
    let p3 = if i + 2 > g.n { 2.0 * p2 - p1 } else { v[i + 2] };
    let f2 = f * f;
    let f3 = f2 * f;
    (p1 * 2.0
        + (p2 - p0) * f
        + (p0 * 2.0 - p1 * 5.0 + p2 * 4.0 - p3) * f2
        + (p1 * 3.0 - p0 - p2 * 3.0 + p3) * f3)
        * 0.5
}

/// ∫ a(t) b*(t) dt by the trapezoid rule.
pub fn overlap1(a: &WavePacket1, b: &WavePacket1) -> Result<C64> {
    a.grid.check_same(&b.grid)?;
    let n = a.grid.len();
    let dt = a.grid.dt();
    Ok((0..n)
        .map(|i| a.amp[i] * b.amp[i].conj() * trapezoid_weight(i, n, dt))
        .sum())
}

/// ∬ a(t_m, t_n) μ*(t_n) μ*(t_m) dt_m dt_n by the product trapezoid rule.
pub fn overlap2(a: &WavePacket2, mu: &WavePacket1) -> Result<C64> {
    a.grid.check_same(&mu.grid)?;
    let n = a.grid.len();
    let dt = a.grid.dt();
    let wmu: Vec<C64> = (0..n)
        .map(|i| mu.amp[i].conj() * trapezoid_weight(i, n, dt))
        .collect();
    let mut s = ZERO;
    for m in 0..n {
        let row = &a.amp[m * n..(m + 1) * n];
        let inner: C64 = row.iter().zip(&wmu).map(|(x, w)| x * w).sum();
        s += inner * wmu[m];
    }
    Ok(s)
}
