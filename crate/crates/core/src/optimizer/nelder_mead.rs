//! Nelder–Mead simplex search with box projection and an evaluation budget.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simplex coefficients and stopping rules.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NelderMeadOptions {
    #[serde(default = "one")]
    pub reflection: f64,
    #[serde(default = "two")]
    pub expansion: f64,
    #[serde(default = "half")]
    pub contraction: f64,
    #[serde(default = "half")]
    pub shrink: f64,
    /// Maximum objective evaluations.
    #[serde(default = "default_budget")]
    pub budget: usize,
    /// Stop when every vertex is within this distance (max norm) of the best.
    #[serde(default = "default_x_tol")]
    pub x_tol: f64,
    /// Stop when every vertex value is within this of the best value.
    #[serde(default = "default_f_tol")]
    pub f_tol: f64,
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn half() -> f64 {
    0.5
}
fn default_budget() -> usize {
    2000
}
fn default_x_tol() -> f64 {
    1e-6
}
fn default_f_tol() -> f64 {
    1e-10
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            budget: default_budget(),
            x_tol: default_x_tol(),
            f_tol: default_f_tol(),
        }
    }
}

/// Box constraints; candidates are projected into the box before evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn uniform(n: usize, lower: f64, upper: f64) -> Self {
        Bounds {
            lower: vec![lower; n],
            upper: vec![upper; n],
        }
    }

    fn project(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

/// Starting point, simplex steps and constraints.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationProblem {
    pub initial: Vec<f64>,
    /// Axis step per coordinate for the initial simplex.
    pub steps: Vec<f64>,
    pub bounds: Option<Bounds>,
    pub options: NelderMeadOptions,
}

impl OptimizationProblem {
    pub fn validate(&self) -> Result<()> {
        let n = self.initial.len();
        if n == 0 {
            return Err(Error::invalid("optimization needs at least one variable"));
        }
        if self.steps.len() != n {
            return Err(Error::invalid("one simplex step per variable is required"));
        }
        if self.options.budget == 0 {
            return Err(Error::invalid("evaluation budget must be >= 1"));
        }
        if let Some(b) = &self.bounds {
            if b.lower.len() != n || b.upper.len() != n {
                return Err(Error::invalid("bounds must match the number of variables"));
            }
            if b.lower.iter().zip(&b.upper).any(|(l, u)| !(l <= u)) {
                return Err(Error::invalid("bounds must be ordered"));
            }
        }
        Ok(())
    }
}

/// Outcome of one simplex search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NelderMeadResult {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    /// Best value seen after each evaluation; non-increasing.
    pub trace: Vec<f64>,
    pub evaluations: usize,
    /// Stopped on the tolerances.
    pub converged: bool,
    /// Stopped because the budget ran out.
    pub exhausted: bool,
}

struct Counter<'a, F> {
    f: F,
    bounds: Option<&'a Bounds>,
    trace: Vec<f64>,
    best: f64,
    budget: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counter<'_, F> {
    fn eval(&mut self, x: &mut [f64]) -> f64 {
        if let Some(b) = self.bounds {
            b.project(x);
        }
        let v = (self.f)(x);
        let v = if v.is_finite() { v } else { f64::INFINITY };
        self.best = self.best.min(v);
        self.trace.push(self.best);
        v
    }

    fn spent(&self) -> bool {
        self.trace.len() >= self.budget
    }
}

fn order(xs: &mut Vec<Vec<f64>>, fs: &mut Vec<f64>) {
    let mut idx: Vec<usize> = (0..fs.len()).collect();
    // Stable sort keeps ties in insertion order, which keeps runs deterministic.
    idx.sort_by(|&a, &b| fs[a].total_cmp(&fs[b]));
    *xs = idx.iter().map(|&i| xs[i].clone()).collect();
    *fs = idx.iter().map(|&i| fs[i]).collect();
}

/// Minimize `f` from the problem's initial simplex.
pub fn nelder_mead(problem: &OptimizationProblem, f: impl FnMut(&[f64]) -> f64) -> Result<NelderMeadResult> {
    problem.validate()?;
    let o = &problem.options;
    let n = problem.initial.len();
    let mut c = Counter {
        f,
        bounds: problem.bounds.as_ref(),
        trace: Vec::with_capacity(o.budget),
        best: f64::INFINITY,
        budget: o.budget,
    };
    let mut xs: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut fs: Vec<f64> = Vec::with_capacity(n + 1);
    let mut x0 = problem.initial.clone();
    fs.push(c.eval(&mut x0));
    xs.push(x0);
    for i in 0..n {
        if c.spent() {
            break;
        }
        let mut x = xs[0].clone();
        x[i] += problem.steps[i];
        fs.push(c.eval(&mut x));
        xs.push(x);
    }
    let mut converged = false;
    while xs.len() == n + 1 && !c.spent() {
        order(&mut xs, &mut fs);
        let spread_f = fs[n] - fs[0];
        let spread_x = xs[1..]
            .iter()
            .flat_map(|x| x.iter().zip(&xs[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread_f.abs() <= o.f_tol && spread_x <= o.x_tol {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| xs[..n].iter().map(|x| x[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64, x: &[f64]| -> Vec<f64> { centroid.iter().zip(x).map(|(c, w)| c + t * (w - c)).collect() };
        let mut xr = along(-o.reflection, &xs[n]);
        let fr = c.eval(&mut xr);
        if fr < fs[0] {
            if c.spent() {
                xs[n] = xr;
                fs[n] = fr;
                break;
            }
            let mut xe = along(o.expansion, &xr);
            let fe = c.eval(&mut xe);
            if fe < fr {
                xs[n] = xe;
                fs[n] = fe;
            } else {
                xs[n] = xr;
                fs[n] = fr;
            }
            continue;
        }
        if fr < fs[n - 1] {
            xs[n] = xr;
            fs[n] = fr;
            continue;
        }
        if c.spent() {
            break;
        }
        let (mut xc, accept_below) = if fr < fs[n] {
            (along(o.contraction, &xr), fr)
        } else {
            (along(o.contraction, &xs[n]), fs[n])
        };
        let fc = c.eval(&mut xc);
        if fc <= accept_below && fc.is_finite() {
            xs[n] = xc;
            fs[n] = fc;
            continue;
        }
        for i in 1..=n {
            if c.spent() {
                break;
            }
            let mut x: Vec<f64> = xs[0].iter().zip(&xs[i]).map(|(b, w)| b + o.shrink * (w - b)).collect();
            fs[i] = c.eval(&mut x);
            xs[i] = x;
        }
    }
    order(&mut xs, &mut fs);
    let exhausted = !converged && c.spent();
    Ok(NelderMeadResult {
        best_x: xs[0].clone(),
        best_f: fs[0],
        evaluations: c.trace.len(),
        trace: c.trace,
        converged,
        exhausted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(x0: Vec<f64>, step: f64, budget: usize) -> OptimizationProblem {
        OptimizationProblem {
            steps: vec![step; x0.len()],
            initial: x0,
            bounds: None,
            options: NelderMeadOptions {
                budget,
                x_tol: 1e-9,
                f_tol: 1e-16,
                ..Default::default()
            },
        }
    }

    #[test]
    fn one_dimensional_parabola() {
        let r = nelder_mead(&problem(vec![0.0], 0.5, 200), |x| (x[0] - 3.0).powi(2)).unwrap();
        assert!((r.best_x[0] - 3.0).abs() < 1e-6, "{r:?}");
        assert!(r.evaluations < 200);
        assert!(r.converged);
    }

    #[test]
    fn five_knot_bowl_reaches_closed_form_minimum() {
        // f = Σ w_i (x_i − c_i)² + 0.3 (x_0 − x_1)², minimized by solving the
        // normal equations.
        let w = [1.0, 2.0, 0.5, 3.0, 1.5];
        let c = [1.0, -2.0, 0.5, 4.0, -1.0];
        let f = |x: &[f64]| {
            x.iter().zip(&w).zip(&c).map(|((x, w), c)| w * (x - c).powi(2)).sum::<f64>() + 0.3 * (x[0] - x[1]).powi(2)
        };
        // First two coordinates: [[w0+0.3, −0.3], [−0.3, w1+0.3]] x = [w0 c0, w1 c1].
        let (a, b, d) = (w[0] + 0.3, -0.3, w[1] + 0.3);
        let det = a * d - b * b;
        let x0 = (d * w[0] * c[0] - b * w[1] * c[1]) / det;
        let x1 = (a * w[1] * c[1] - b * w[0] * c[0]) / det;
        let want = [x0, x1, c[2], c[3], c[4]];
        let r = nelder_mead(&problem(vec![0.0; 5], 1.0, 5000), f).unwrap();
        for (g, w) in r.best_x.iter().zip(want) {
            assert!((g - w).abs() < 1e-4, "{:?} vs {want:?}", r.best_x);
        }
    }

    #[test]
    fn trace_is_monotone_and_never_worse_than_start() {
        let f = |x: &[f64]| (x[0] * x[0] - x[1]).powi(2) + (1.0 - x[0]).powi(2);
        let p = problem(vec![-1.2, 1.0], 0.3, 300);
        let r = nelder_mead(&p, f).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.best_f <= f(&p.initial));
        assert_eq!(r.trace.len(), r.evaluations);
        assert!(r.exhausted || r.converged);
    }

    #[test]
    fn deterministic_trace() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + x[0]).powi(2) + x[2].abs();
        let p = problem(vec![2.0, 2.0, 2.0], 0.4, 400);
        assert_eq!(nelder_mead(&p, f).unwrap(), nelder_mead(&p, f).unwrap());
    }

    #[test]
    fn budget_is_respected() {
        let r = nelder_mead(&problem(vec![5.0, 5.0], 1.0, 17), |x| x[0] * x[0] + x[1] * x[1]).unwrap();
        assert_eq!(r.evaluations, 17);
        assert!(r.exhausted);
        assert!(!r.converged);
    }

    #[test]
    fn bounds_are_projected() {
        let mut p = problem(vec![0.5], 0.2, 200);
        p.bounds = Some(Bounds::uniform(1, 0.0, 1.0));
        let r = nelder_mead(&p, |x| {
            assert!((0.0..=1.0).contains(&x[0]));
            (x[0] - 3.0).powi(2)
        })
        .unwrap();
        assert!((r.best_x[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let r = nelder_mead(&problem(vec![1.0], 0.5, 100), |x| if x[0] > 1.2 { f64::NAN } else { (x[0] - 1.1).powi(2) }).unwrap();
        assert!((r.best_x[0] - 1.1).abs() < 1e-5);
    }

    #[test]
    fn invalid_problems_are_refused() {
        assert!(nelder_mead(&problem(vec![], 0.1, 10), |_| 0.0).is_err());
        assert!(nelder_mead(&problem(vec![0.0], 0.1, 0), |_| 0.0).is_err());
    }
}
