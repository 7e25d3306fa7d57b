//! Batch optimizers for smooth convex objectives.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Lbfgs,
    GradientDescent,
}

impl std::fmt::Display for Optimizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Optimizer::Lbfgs => "lbfgs",
            Optimizer::GradientDescent => "gradient_descent",
        })
    }
}

impl std::str::FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "lbfgs" => Ok(Optimizer::Lbfgs),
            "gradient_descent" => Ok(Optimizer::GradientDescent),
            other => Err(Error::Config(format!("unknown optimizer `{other}`"))),
        }
    }
}

const MEMORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 50;

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Objective value after every accepted step, starting with the initial point.
    pub history: Vec<f64>,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_finite(f: f64, g: &[f64]) -> Result<()> {
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Training(format!(
            "non-finite objective or gradient (objective = {f})"
        )));
    }
    Ok(())
}

/// Minimizes `f` from `x0`. L-BFGS uses two-loop recursion over the last ten
/// curvature pairs; both methods use Armijo backtracking. Stops when the
/// relative objective change falls below `tol` or after `max_iter` steps.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, method: Optimizer, max_iter: usize, tol: f64) -> Result<OptimResult>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    check_finite(fx, &g)?;
    let mut history = vec![fx];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter {
        let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gnorm < 1e-12 {
            converged = true;
            break;
        }
        let mut dir = match method {
            Optimizer::Lbfgs => two_loop(&g, &pairs),
            Optimizer::GradientDescent => g.iter().map(|v| -v).collect(),
        };
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            pairs.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = dot(&g, &dir);
        }
        let mut step = if pairs.is_empty() {
            1.0 / dot(&g, &g).sqrt().max(1.0)
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            let (ft, gt) = f(&trial);
            if ft.is_finite() && gt.iter().all(|v| v.is_finite()) && ft <= fx + ARMIJO_C1 * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            if !pairs.is_empty() {
                pairs.clear();
                continue;
            }
            // no descent possible at working precision
            converged = true;
            break;
        };
        iterations += 1;

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            if pairs.len() == MEMORY {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }

        let rel = (fx - f_new).abs() / fx.abs().max(f_new.abs()).max(1.0);
        x = x_new;
        fx = f_new;
        g = g_new;
        history.push(fx);
        if rel < tol {
            converged = true;
            break;
        }
    }

    Ok(OptimResult {
        x,
        objective: fx,
        iterations,
        history,
        converged,
    })
}

fn two_loop(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> (f64, Vec<f64>) {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
        (f, g)
    }

    #[test]
    fn lbfgs_solves_rosenbrock() {
        let r = minimize(rosenbrock, vec![-1.2, 1.0], Optimizer::Lbfgs, 500, 1e-14).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r.x);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn gradient_descent_on_quadratic() {
        let quad = |x: &[f64]| (x[0] * x[0] + 4.0 * x[1] * x[1], vec![2.0 * x[0], 8.0 * x[1]]);
        let r = minimize(quad, vec![3.0, -2.0], Optimizer::GradientDescent, 2000, 1e-16).unwrap();
        assert!(r.objective < 1e-8);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn non_finite_start_is_training_error() {
        let bad = |_: &[f64]| (f64::NAN, vec![0.0]);
        assert!(matches!(
            minimize(bad, vec![0.0], Optimizer::Lbfgs, 10, 1e-6),
            Err(Error::Training(_))
        ));
    }
}
