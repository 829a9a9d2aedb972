//! Limited-memory BFGS with projection onto simple lower bounds.
//!
//! Variables at an active bound whose gradient pushes outward are frozen for
//! the step; the two-loop recursion runs on the rest. The line search
//! backtracks along the projected arc. Objective evaluations that fail (a
//! trial point hitting a collision) count as infinite and shrink the step.
//!
//! Close to a minimizer the predicted decrease drops below the rounding level
//! of the objective and the Armijo test becomes a coin flip. There an
//! approximate Wolfe test is used instead: accept if the objective did not
//! increase beyond its rounding level and the directional derivative has
//! flattened without changing sign too far.

use std::collections::VecDeque;

use crate::error::Result;

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iters: usize,
    /// Converged when `|P(x − g) − x|₂ ≤ grad_tol·√dim`.
    pub grad_tol: f64,
    /// Stop when accepted steps stay shorter than this (max-norm) for a while.
    pub step_tol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 20,
            max_iters: 100_000,
            grad_tol: 1e-8,
            step_tol: 1e-15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    SmallStep,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct OptResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub proj_grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Trial points rejected because the objective could not be evaluated.
    pub rejected: usize,
    pub reason: StopReason,
}

impl OptResult {
    pub fn converged(&self) -> bool {
        self.reason == StopReason::Converged
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project(x: &mut [f64], lower: &[f64]) {
    for (xi, &lo) in x.iter_mut().zip(lower) {
        if *xi < lo {
            *xi = lo;
        }
    }
}

/// Euclidean norm of `P(x − g) − x`.
pub fn projected_gradient_norm(x: &[f64], g: &[f64], lower: &[f64]) -> f64 {
    x.iter()
        .zip(g)
        .zip(lower)
        .map(|((&xi, &gi), &lo)| {
            let step = (xi - gi).max(lo) - xi;
            step * step
        })
        .sum::<f64>()
        .sqrt()
}

/// Minimizes `f` subject to `x ≥ lower` (use `-inf` for free variables).
///
/// `f` returns the value and gradient, or an error for points where the
/// objective is undefined. The starting point must be evaluable.
pub fn minimize_bounded<F>(mut f: F, x0: &[f64], lower: &[f64], opts: &LbfgsOptions) -> Result<OptResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    assert_eq!(x0.len(), lower.len());
    let dim = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lower);
    let (mut fx, mut g) = f(&x)?;
    let mut evaluations = 1;
    let mut rejected = 0;
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let tol = opts.grad_tol * (dim as f64).sqrt();
    let mut small_steps = 0;
    let mut restarted = false;

    let mut iter = 0;
    let reason = loop {
        let pg = projected_gradient_norm(&x, &g, lower);
        if pg <= tol {
            break StopReason::Converged;
        }
        if iter >= opts.max_iters {
            break StopReason::MaxIterations;
        }
        iter += 1;

        let free: Vec<bool> = (0..dim).map(|i| !(x[i] <= lower[i] && g[i] > 0.0)).collect();
        let mut d: Vec<f64> = (0..dim).map(|i| if free[i] { -g[i] } else { 0.0 }).collect();
        two_loop(&mut d, &hist, &free);
        let mut gd = dot(&g, &d);
        if !(gd < 0.0) {
            hist.clear();
            d = (0..dim).map(|i| if free[i] { -g[i] } else { 0.0 }).collect();
            gd = dot(&g, &d);
        }
        let mut alpha = if hist.is_empty() {
            (1.0 / d.iter().map(|v| v * v).sum::<f64>().sqrt()).min(1.0)
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..80 {
            let mut xt: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
            project(&mut xt, lower);
            let s: Vec<f64> = xt.iter().zip(&x).map(|(a, b)| a - b).collect();
            evaluations += 1;
            match f(&xt) {
                Ok((ft, gt)) if ft.is_finite() => {
                    let gs = dot(&g, &s);
                    let armijo = ft <= fx + 1e-4 * gs;
                    let noise = 1e-14 * fx.abs().max(1.0);
                    let gts = dot(&gt, &s);
                    let flat = ft <= fx + noise && gts >= 0.9 * gs && gts <= -0.8 * gs;
                    if armijo || flat {
                        accepted = Some((xt, ft, gt, s));
                        break;
                    }
                }
                Ok(_) | Err(_) => rejected += 1,
            }
            alpha *= 0.5;
        }

        let Some((xt, ft, gt, s)) = accepted else {
            if restarted || hist.is_empty() {
                break StopReason::LineSearchFailed;
            }
            hist.clear();
            restarted = true;
            continue;
        };
        restarted = false;

        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
            if hist.len() == opts.memory {
                hist.pop_front();
            }
            hist.push_back((s.clone(), y, 1.0 / sy));
        }
        let step = s.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        x = xt;
        fx = ft;
        g = gt;
        if step < opts.step_tol {
            small_steps += 1;
            if small_steps >= 10 {
                break StopReason::SmallStep;
            }
        } else {
            small_steps = 0;
        }
    };

    Ok(OptResult {
        proj_grad_norm: projected_gradient_norm(&x, &g, lower),
        x,
        f: fx,
        grad: g,
        iterations: iter,
        evaluations,
        rejected,
        reason,
    })
}

fn two_loop(d: &mut [f64], hist: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, free: &[bool]) {
    if hist.is_empty() {
        return;
    }
    let masked = |v: &[f64], w: &[f64]| -> f64 {
        v.iter()
            .zip(w)
            .zip(free)
            .filter(|(_, &f)| f)
            .map(|((a, b), _)| a * b)
            .sum()
    };
    let mut alphas = Vec::with_capacity(hist.len());
    for (s, y, rho) in hist.iter().rev() {
        let a = rho * masked(s, d);
        for i in 0..d.len() {
            if free[i] {
                d[i] -= a * y[i];
            }
        }
        alphas.push(a);
    }
    let (s, y, _) = hist.back().unwrap();
    let yy = masked(y, y);
    let gamma = if yy > 0.0 { masked(s, y) / yy } else { 1.0 };
    let gamma = if gamma > 0.0 { gamma } else { 1.0 };
    for v in d.iter_mut() {
        *v *= gamma;
    }
    for ((s, y, rho), a) in hist.iter().zip(alphas.into_iter().rev()) {
        let b = rho * masked(y, d);
        for i in 0..d.len() {
            if free[i] {
                d[i] += (a - b) * s[i];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn rosenbrock(x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mut f = 0.0;
        let mut g = vec![0.0; x.len()];
        for i in 0..x.len() - 1 {
            let a = x[i + 1] - x[i] * x[i];
            let b = 1.0 - x[i];
            f += 100.0 * a * a + b * b;
            g[i] += -400.0 * x[i] * a - 2.0 * b;
            g[i + 1] += 200.0 * a;
        }
        Ok((f, g))
    }

    #[test]
    fn rosenbrock_unconstrained() {
        let x0 = vec![-1.2, 1.0, -1.2, 1.0, 0.5];
        let lower = vec![f64::NEG_INFINITY; 5];
        let r = minimize_bounded(rosenbrock, &x0, &lower, &LbfgsOptions::default()).unwrap();
        assert!(r.converged(), "{:?}", r.reason);
        for v in &r.x {
            assert!((v - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn active_bound_is_respected() {
        // min (x-(-2))² + (y-3)² with x ≥ 0.
        let f = |x: &[f64]| Ok(((x[0] + 2.0).powi(2) + (x[1] - 3.0).powi(2), vec![2.0 * (x[0] + 2.0), 2.0 * (x[1] - 3.0)]));
        let r = minimize_bounded(f, &[5.0, 0.0], &[0.0, f64::NEG_INFINITY], &LbfgsOptions::default())
            .unwrap();
        assert!(r.converged());
        assert_eq!(r.x[0], 0.0);
        assert!((r.x[1] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn undefined_region_is_stepped_around() {
        // Objective undefined for x < 0.5; unconstrained minimum at 1.
        let f = |x: &[f64]| {
            if x[0] < 0.5 {
                Err(Error::ConfigCollision)
            } else {
                Ok(((x[0] - 1.0).powi(2), vec![2.0 * (x[0] - 1.0)]))
            }
        };
        let r = minimize_bounded(f, &[40.0], &[f64::NEG_INFINITY], &LbfgsOptions::default()).unwrap();
        assert!(r.converged());
        assert!((r.x[0] - 1.0).abs() < 1e-8);
    }
}
