//! Cubic smoothing spline on uniformly spaced knots (Reinsch form).
//!
//! Minimizes Σᵢ (yᵢ − f(xᵢ))² + λ ∫ f''² with natural end conditions. The
//! penalty is λ = τ⁴/h for smoothing time τ and knot spacing h, so features
//! shorter than about τ are damped while the fit stays local in knot units.
//! Each smoothed knot value is then clipped to the range spanned by its own
//! and its two neighbouring raw knot values, and the curve is the natural
//! interpolating spline through the clipped values.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TimeGrid;

/// Knot values of a detuning curve, uniformly spaced over `[t_start, t_end]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplineControl {
    pub knot_values: Vec<f64>,
    pub t_start: f64,
    pub t_end: f64,
    pub tau_spline: f64,
}

impl SplineControl {
    pub fn constant(value: f64, n_knots: usize, t_start: f64, t_end: f64, tau_spline: f64) -> Self {
        SplineControl {
            knot_values: vec![value; n_knots],
            t_start,
            t_end,
            tau_spline,
        }
    }

    pub fn knot_times(&self) -> Vec<f64> {
        let k = self.knot_values.len();
        let h = (self.t_end - self.t_start) / (k.max(2) - 1) as f64;
        (0..k).map(|i| self.t_start + i as f64 * h).collect()
    }

    pub fn smooth(&self) -> Result<SmoothedSpline> {
        SmoothedSpline::fit(self)
    }
}

/// Natural cubic spline through the smoothed knot values.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothedSpline {
    t_start: f64,
    h: f64,
    /// Smoothed values at the knots.
    values: Vec<f64>,
    /// Second derivatives at the knots; zero at both ends.
    curvature: Vec<f64>,
    /// Whether any smoothed value had to be clipped into its neighbour band.
    clipped: bool,
}

impl SmoothedSpline {
    pub fn fit(c: &SplineControl) -> Result<Self> {
        let k = c.knot_values.len();
        if k < 2 {
            return Err(Error::invalid(format!("spline needs at least 2 knots, got {k}")));
        }
        if !(c.tau_spline > 0.0 && c.tau_spline.is_finite()) {
            return Err(Error::invalid(format!("tau_spline must be > 0, got {}", c.tau_spline)));
        }
        if !(c.t_end > c.t_start) {
            return Err(Error::invalid("knot span must have positive length"));
        }
        if c.knot_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("knot values must be finite"));
        }
        let h = (c.t_end - c.t_start) / (k - 1) as f64;
        let y = DVector::from_column_slice(&c.knot_values);
        if k == 2 {
            return Ok(SmoothedSpline {
                t_start: c.t_start,
                h,
                values: c.knot_values.clone(),
                curvature: vec![0.0; 2],
                clipped: false,
            });
        }
        let m = k - 2;
        let lambda = c.tau_spline.powi(4) / h;
        let mut q = DMatrix::<f64>::zeros(k, m);
        let mut r = DMatrix::<f64>::zeros(m, m);
        for j in 0..m {
            q[(j, j)] = 1.0 / h;
            q[(j + 1, j)] = -2.0 / h;
            q[(j + 2, j)] = 1.0 / h;
            r[(j, j)] = 2.0 * h / 3.0;
            if j + 1 < m {
                r[(j, j + 1)] = h / 6.0;
                r[(j + 1, j)] = h / 6.0;
            }
        }
        let a = &r + lambda * q.transpose() * &q;
        let rhs = q.transpose() * &y;
        let gamma = a
            .cholesky()
            .ok_or_else(|| Error::invalid("smoothing system is not positive definite"))?
            .solve(&rhs);
        let mut f = &y - lambda * &q * &gamma;
        let mut gamma = gamma;
        let mut clipped = false;
        for i in 0..k {
            let lo_i = i.saturating_sub(1);
            let hi_i = (i + 1).min(k - 1);
            let band = &c.knot_values[lo_i..=hi_i];
            let lo = band.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = band.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            // Roundoff on a band edge is not a clip.
            let slack = 1e-13 * (1.0 + lo.abs().max(hi.abs()));
            if f[i] < lo - slack || f[i] > hi + slack {
                f[i] = f[i].clamp(lo, hi);
                clipped = true;
            }
        }
        if clipped {
            gamma = r
                .cholesky()
                .ok_or_else(|| Error::invalid("spline curvature system is singular"))?
                .solve(&(q.transpose() * &f));
        }
        let mut curvature = vec![0.0; k];
        curvature[1..=m].copy_from_slice(gamma.as_slice());
        Ok(SmoothedSpline {
            t_start: c.t_start,
            h,
            values: f.as_slice().to_vec(),
            curvature,
            clipped,
        })
    }

    pub fn knot_values(&self) -> &[f64] {
        &self.values
    }

    /// True when the band clip changed at least one knot; the map from raw
    /// to smoothed knots is linear otherwise.
    pub fn is_clipped(&self) -> bool {
        self.clipped
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let k = self.values.len();
        let x = (t - self.t_start) / self.h;
        let i = if x <= 0.0 { 0 } else { (x.floor() as usize).min(k - 2) };
        (i, t - (self.t_start + i as f64 * self.h))
    }

    /// Value at `t`; linear continuation outside the knot span.
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.values.len();
        let end = self.t_start + (k - 1) as f64 * self.h;
        if t < self.t_start {
            return self.values[0] + (t - self.t_start) * self.deriv(self.t_start);
        }
        if t > end {
            return self.values[k - 1] + (t - end) * self.deriv(end);
        }
        let (i, d) = self.locate(t);
        let h = self.h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (g0, g1) = (self.curvature[i], self.curvature[i + 1]);
        let e = h - d;
        ((d * y1 + e * y0) / h) - d * e / 6.0 * ((1.0 + d / h) * g1 + (1.0 + e / h) * g0)
    }

    /// First derivative at `t`, clamped to the knot span.
    pub fn deriv(&self, t: f64) -> f64 {
        let k = self.values.len();
        let end = self.t_start + (k - 1) as f64 * self.h;
        let (i, d) = self.locate(t.clamp(self.t_start, end));
        let h = self.h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (g0, g1) = (self.curvature[i], self.curvature[i + 1]);
        let e = h - d;
        (y1 - y0) / h + (g1 * (3.0 * d * d - h * h) - g0 * (3.0 * e * e - h * h)) / (6.0 * h)
    }
}

/// Smoothed detuning sampled on every grid point.
pub fn eval_spline(c: &SplineControl, grid: &TimeGrid) -> Result<Vec<f64>> {
    let s = SmoothedSpline::fit(c)?;
    Ok(grid.times().into_iter().map(|t| s.eval(t)).collect())
}
