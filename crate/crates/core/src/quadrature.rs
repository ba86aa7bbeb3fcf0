//! Quadrature on uniform grids.
//!
//! `trapezoid*` is the rule used for overlaps and norms. Running integrals
//! whose upper limit sits in the interior of a pulse use the fourth-order
//! Gregory end corrections instead, because the trapezoid end-point error
//! (order dt²·f') is larger than the tolerances of the probability budget.

use num_complex::Complex64 as C64;

pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => dt * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1])),
    }
}

pub fn trapezoid_c(values: &[C64], dt: f64) -> C64 {
    match values.len() {
        0 | 1 => C64::new(0.0, 0.0),
        n => (values.iter().sum::<C64>() - 0.5 * (values[0] + values[n - 1])) * dt,
    }
}

/// Trapezoid weight of point `i` on a grid with `n_points` points.
#[inline]
pub fn trapezoid_weight(i: usize, n_points: usize, dt: f64) -> f64 {
    if n_points < 2 {
        0.0
    } else if i == 0 || i == n_points - 1 {
        0.5 * dt
    } else {
        dt
    }
}

/// Integral over points `lo..=hi` of `values`, given inclusive prefix sums
/// `prefix[i] = values[0] + ... + values[i]`.
///
/// Five or more intervals use the fourth-order Gregory rule
/// h·[3/8, 7/6, 23/24, 1, …, 1, 23/24, 7/6, 3/8]; shorter spans fall back to
/// Boole, Simpson 3/8, Simpson and trapezoid.
#[inline]
pub fn segment(values: &[f64], prefix: &[f64], lo: usize, hi: usize, dt: f64) -> f64 {
    debug_assert!(lo <= hi && hi < values.len());
    let v = |i: usize| values[lo + i];
    match hi - lo {
        0 => 0.0,
        1 => 0.5 * dt * (v(0) + v(1)),
        2 => dt / 3.0 * (v(0) + 4.0 * v(1) + v(2)),
        3 => 3.0 * dt / 8.0 * (v(0) + 3.0 * v(1) + 3.0 * v(2) + v(3)),
        4 => 2.0 * dt / 45.0 * (7.0 * v(0) + 32.0 * v(1) + 12.0 * v(2) + 32.0 * v(3) + 7.0 * v(4)),
        n => {
            let total = prefix[hi] - if lo == 0 { 0.0 } else { prefix[lo - 1] };
            dt * (total - 5.0 / 8.0 * (v(0) + v(n)) + 1.0 / 6.0 * (v(1) + v(n - 1))
                - 1.0 / 24.0 * (v(2) + v(n - 2)))
        }
    }
}

/// Weight of point `lo + i` in [`segment`] over `lo..=hi`.
#[inline]
pub fn segment_weight(i: usize, len: usize, dt: f64) -> f64 {
    // `len` is the number of intervals.
    const SIMPSON: [f64; 3] = [1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0];
    const SIMPSON38: [f64; 4] = [3.0 / 8.0, 9.0 / 8.0, 9.0 / 8.0, 3.0 / 8.0];
    const BOOLE: [f64; 5] = [14.0 / 45.0, 64.0 / 45.0, 24.0 / 45.0, 64.0 / 45.0, 14.0 / 45.0];
    let w = match len {
        0 => 0.0,
        1 => 0.5,
        2 => SIMPSON[i],
        3 => SIMPSON38[i],
        4 => BOOLE[i],
        n => {
            let j = i.min(n - i);
            match j {
                0 => 3.0 / 8.0,
                1 => 7.0 / 6.0,
                2 => 23.0 / 24.0,
                _ => 1.0,
            }
        }
    };
    w * dt
}

/// Running integral `out[n] = ∫_{t0}^{t_n} f` for every grid index `n`.
pub fn running(values: &[f64], dt: f64) -> Vec<f64> {
    let prefix = prefix_sums(values);
    (0..values.len())
        .map(|n| segment(values, &prefix, 0, n, dt))
        .collect()
}

/// Running tail integral `out[n] = ∫_{t_n}^{tN} f`.
pub fn running_tail(values: &[f64], dt: f64) -> Vec<f64> {
    let prefix = prefix_sums(values);
    let last = values.len().saturating_sub(1);
    (0..values.len())
        .map(|n| segment(values, &prefix, n, last, dt))
        .collect()
}

pub fn prefix_sums(values: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    values
        .iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, a: f64, b: f64) -> (Vec<f64>, f64) {
        let dt = (b - a) / n as f64;
        ((0..=n).map(|i| a + i as f64 * dt).collect(), dt)
    }

    #[test]
    fn trapezoid_is_exact_for_lines() {
        let (t, dt) = grid(10, 0.0, 2.0);
        let v: Vec<f64> = t.iter().map(|x| 3.0 * x + 1.0).collect();
        assert!((trapezoid(&v, dt) - 8.0).abs() < 1e-14);
    }

    #[test]
    fn segment_is_fourth_order() {
        let f = |x: f64| (1.3 * x).sin() + x * x;
        let exact = |a: f64, b: f64| {
            (-(1.3 * b).cos() + (1.3 * a).cos()) / 1.3 + (b * b * b - a * a * a) / 3.0
        };
        let mut errs = Vec::new();
        for n in [40usize, 80] {
            let (t, dt) = grid(n, 0.0, 2.0);
            let v: Vec<f64> = t.iter().map(|&x| f(x)).collect();
            let p = prefix_sums(&v);
            errs.push((segment(&v, &p, 3, n - 7, dt) - exact(t[3], t[n - 7])).abs());
        }
        assert!(errs[0] / errs[1] > 12.0, "{errs:?}");
        assert!(errs[1] < 1e-6, "{errs:?}");
    }

    #[test]
    fn short_segments_match_small_rules() {
        let (t, dt) = grid(8, 0.0, 1.0);
        let v: Vec<f64> = t.iter().map(|x| x * x * x).collect();
        let p = prefix_sums(&v);
        for len in 0..=8usize {
            let exact = t[len].powi(4) / 4.0;
            let got = segment(&v, &p, 0, len, dt);
            // Trapezoid on one interval is only second order.
            let tol = if len == 1 { 1e-3 } else { 1e-12 };
            assert!((got - exact).abs() < tol, "len {len}: {got} vs {exact}");
        }
    }

    #[test]
    fn weights_reproduce_segment() {
        let (t, dt) = grid(30, -1.0, 2.0);
        let v: Vec<f64> = t.iter().map(|x| (x * 0.7).exp()).collect();
        let p = prefix_sums(&v);
        for (lo, hi) in [(0, 30), (2, 5), (4, 8), (5, 6), (7, 19)] {
            let w: f64 = (lo..=hi)
                .map(|i| segment_weight(i - lo, hi - lo, dt) * v[i])
                .sum();
            assert!((w - segment(&v, &p, lo, hi, dt)).abs() < 1e-12);
        }
    }

    #[test]
    fn running_and_tail_add_to_total() {
        let (t, dt) = grid(400, 0.0, 3.0);
        let v: Vec<f64> = t.iter().map(|x| (-x * x).exp()).collect();
        let head = running(&v, dt);
        let tail = running_tail(&v, dt);
        for n in 0..v.len() {
            // One-interval pieces fall back to the trapezoid rule.
            assert!((head[n] + tail[n] - head[400]).abs() < 1e-7, "n {n}");
        }
    }
}
