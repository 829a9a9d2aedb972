//! Keplerian action infima and the collision lower bounds built from them.
//!
//! For `I(r) = ∫₀ᵀ μ/2 |ṙ|² + α/|r| dt` over planar paths whose endpoints
//! subtend the angle `θ`, the infimum is `(3/2)(μ α² θ² T)^{1/3}`; over paths
//! that also pass through the origin it is the same expression at `θ = π`.
//! Applying these to the four binary actions gives the bounds below.

use std::f64::consts::PI;

use crate::action::{lift, unit_integral, unit_integral_grad};
use crate::error::{Error, Result};
use crate::geometry::PlanarVec;
use crate::optim::{minimize_bounded, LbfgsOptions, OptResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeplerParams {
    pub mu: f64,
    pub alpha: f64,
    pub t: f64,
    pub theta: f64,
}

impl KeplerParams {
    pub fn new(mu: f64, alpha: f64, t: f64, theta: f64) -> Result<Self> {
        if !(mu > 0.0 && alpha > 0.0 && t > 0.0) {
            return Err(Error::Domain(format!(
                "Kepler parameters must be positive: mu={mu}, alpha={alpha}, T={t}"
            )));
        }
        if !(theta > 0.0 && theta <= PI) {
            return Err(Error::Domain(format!("theta={theta} outside (0, pi]")));
        }
        Ok(Self { mu, alpha, t, theta })
    }
}

pub fn kepler_inf(p: KeplerParams) -> f64 {
    1.5 * (p.mu * p.alpha * p.alpha * p.theta * p.theta * p.t).cbrt()
}

pub fn kepler_collision_inf(mu: f64, alpha: f64, t: f64) -> f64 {
    1.5 * (mu * alpha * alpha * PI * PI * t).cbrt()
}

/// The four boundary collisions that can occur for a prograde minimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollisionCase {
    /// Bodies 1 and 2 meet at `t = 0`.
    Q1Q2AtStart,
    /// Bodies 2 and 3 meet at `t = 0`.
    Q2Q3AtStart,
    /// Bodies 1 and 2 meet at `t = 1`.
    Q1Q2AtEnd,
    /// Bodies 1 and 3 meet at `t = 1`.
    Q1Q3AtEnd,
}

impl CollisionCase {
    pub const ALL: [CollisionCase; 4] = [
        CollisionCase::Q1Q2AtStart,
        CollisionCase::Q2Q3AtStart,
        CollisionCase::Q1Q2AtEnd,
        CollisionCase::Q1Q3AtEnd,
    ];
}

fn check_angle(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < PI / 6.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("theta={theta} outside (0, pi/6)")))
    }
}

fn c(x: f64) -> f64 {
    x.cbrt()
}

/// Lower bound on the action of a minimizer with the given boundary collision.
pub fn case_bound(case: CollisionCase, theta: f64) -> Result<f64> {
    check_angle(theta)?;
    let t2 = theta * theta;
    let half = PI / 2.0;
    let sum = match case {
        CollisionCase::Q1Q2AtStart => c(2.0 * PI * PI) + c(2.0 * t2) + c(t2),
        CollisionCase::Q2Q3AtStart => {
            c(PI * PI / 2.0) + c(2.0 * t2) + c(2.0 * (theta + half).powi(2))
        }
        CollisionCase::Q1Q2AtEnd => c(2.0 * PI * PI) + 2.0 * c(2.0 * t2),
        CollisionCase::Q1Q3AtEnd => {
            c(2.0 * PI * PI)
                + 3.0 * c((theta + half).powi(2) / 4.0)
                + c((half - theta).powi(2) / 4.0)
        }
    };
    Ok(1.5 * sum)
}

/// Case 1 bound before the end angle `alpha` of the 2→3, 2→4 diagonals is
/// eliminated. Dominates [`g1`] for every `alpha` by concavity of `x^{2/3}`.
pub fn case1_alpha_bound(theta: f64, alpha: f64) -> Result<f64> {
    check_angle(theta)?;
    if !(alpha > 0.0 && alpha < PI / 2.0) {
        return Err(Error::Domain(format!("alpha={alpha} outside (0, pi/2)")));
    }
    Ok(1.5
        * (c(2.0 * PI * PI)
            + c(2.0 * theta * theta)
            + c((theta - alpha).powi(2) / 4.0)
            + c((theta + alpha).powi(2) / 4.0)))
}

/// `g1(θ) = (3/2)[(2π²)^{1/3} + (2θ²)^{1/3} + θ^{2/3}]`, the smallest case bound.
pub fn g1(theta: f64) -> Result<f64> {
    case_bound(CollisionCase::Q1Q2AtStart, theta)
}

/// Lower bound on the action of any path ending or starting in total collision.
pub fn total_collision_bound() -> f64 {
    3.0 * c(2.0 * PI * PI) + 3.0 * c(PI * PI / 4.0)
}

/// Result of minimizing the discretized Keplerian action.
#[derive(Debug, Clone)]
pub struct KeplerNumeric {
    pub action: f64,
    pub nodes: Vec<PlanarVec>,
    pub opt: OptResult,
}

/// Minimizes the exact action of piecewise-linear paths with `n` segments
/// from the ray at angle 0 to the ray at angle `θ`, both radii free.
pub fn kepler_numeric_inf(p: KeplerParams, n: usize) -> Result<KeplerNumeric> {
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 segments, got {n}")));
    }
    let dt = p.t / n as f64;
    let (s, co) = p.theta.sin_cos();
    let end_dir = PlanarVec::new(co, s);
    let decode = |x: &[f64]| -> Vec<PlanarVec> {
        let mut nodes = Vec::with_capacity(n + 1);
        nodes.push(PlanarVec::new(x[0], 0.0));
        for j in 1..n {
            nodes.push(PlanarVec::new(x[2 * j - 1], x[2 * j]));
        }
        nodes.push(end_dir * x[2 * n - 1]);
        nodes
    };
    let objective = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let nodes = decode(x);
        let mut g = vec![PlanarVec::ZERO; n + 1];
        let mut f = 0.0;
        for j in 0..n {
            let v = nodes[j + 1] - nodes[j];
            f += 0.5 * p.mu * v.norm_sq() / dt;
            let k = v * (p.mu / dt);
            g[j] += -k;
            g[j + 1] += k;
            let (i, gp, ge) = unit_integral_grad(lift(nodes[j], 0.0), lift(nodes[j + 1], 0.0))?;
            let w = p.alpha * dt;
            f += w * i;
            g[j] += PlanarVec::new(gp[0], gp[1]) * w;
            g[j + 1] += PlanarVec::new(ge[0], ge[1]) * w;
        }
        let mut grad = vec![0.0; 2 * n];
        grad[0] = g[0].x;
        for j in 1..n {
            grad[2 * j - 1] = g[j].x;
            grad[2 * j] = g[j].y;
        }
        grad[2 * n - 1] = g[n].dot(end_dir);
        Ok((f, grad))
    };

    // Start off the optimum: a circular arc at 1.3 times the circular radius.
    let omega = p.theta / p.t;
    let radius = 1.3 * (p.alpha / (p.mu * omega * omega)).cbrt();
    let mut x0 = vec![0.0; 2 * n];
    x0[0] = radius;
    for j in 1..n {
        let phi = p.theta * j as f64 / n as f64;
        x0[2 * j - 1] = radius * phi.cos();
        x0[2 * j] = radius * phi.sin();
    }
    x0[2 * n - 1] = radius;
    let mut lower = vec![f64::NEG_INFINITY; 2 * n];
    lower[0] = 0.0;
    lower[2 * n - 1] = 0.0;
    let opts = LbfgsOptions {
        grad_tol: 1e-10,
        ..LbfgsOptions::default()
    };
    let opt = minimize_bounded(objective, &x0, &lower, &opts)?;
    let nodes = decode(&opt.x);
    // Re-evaluate the value with the plain kernel as a consistency anchor.
    let mut action = 0.0;
    for w in nodes.windows(2) {
        action += 0.5 * p.mu * (w[1] - w[0]).norm_sq() / dt
            + p.alpha * dt * unit_integral(lift(w[0], 0.0), lift(w[1], 0.0))?;
    }
    Ok(KeplerNumeric { action, nodes, opt })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kp(mu: f64, alpha: f64, t: f64, theta: f64) -> KeplerParams {
        KeplerParams::new(mu, alpha, t, theta).unwrap()
    }

    // Reference values below come from 30-digit evaluations of the formulas.

    #[test]
    fn kepler_examples() {
        assert!((kepler_inf(kp(0.5, 2.0, 1.0, PI)) - 4.053851535).abs() < 1e-9);
        assert!((kepler_inf(kp(1.0, 1.0, 1.0, PI / 2.0)) - 2.026925768).abs() < 1e-9);
        assert!(kepler_inf(kp(1.0, 1.0, 1.0, 1e-12)) < 1e-7);
        assert!((kepler_collision_inf(0.25, 0.5, 2.0) - 1.608772048).abs() < 1e-9);
        for (mu, a, t) in [(0.5, 2.0, 1.0), (0.25, 0.5, 2.0), (3.0, 0.1, 0.7)] {
            assert_eq!(kepler_collision_inf(mu, a, t), kepler_inf(kp(mu, a, t, PI)));
        }
        assert!(KeplerParams::new(1.0, 1.0, 1.0, 4.0).is_err());
        assert!(KeplerParams::new(0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn case_examples() {
        assert!((g1(PI / 7.0).unwrap() - 6.040948599).abs() < 1e-8);
        assert!((g1(0.05 * PI).unwrap() - 5.040731755).abs() < 1e-8);
        assert!((g1(1e-12).unwrap() - 1.5 * (2.0 * PI * PI).cbrt()).abs() < 1e-6);
        assert!(
            (case_bound(CollisionCase::Q2Q3AtStart, 0.05 * PI).unwrap() - 5.825258).abs() < 1e-5
        );
        for theta in [0.01, 0.1, 0.5] {
            let d = case_bound(CollisionCase::Q1Q2AtEnd, theta).unwrap() - g1(theta).unwrap();
            let expect = 1.5 * theta.powf(2.0 / 3.0) * (2f64.cbrt() - 1.0);
            assert!((d - expect).abs() < 1e-12);
        }
        for bad in [0.0, PI / 6.0, -0.1, 1.0] {
            assert!(g1(bad).is_err());
        }
    }

    #[test]
    fn total_collision_value() {
        let v = total_collision_bound();
        assert!((v - 12.16155461).abs() < 1e-8);
        assert!(v >= 12.16);
        let twice_12 = 2.0 * kepler_inf(kp(0.5, 2.0, 1.0, PI));
        assert!((3.0 * (2.0 * PI * PI).cbrt() - twice_12).abs() < 1e-12);
    }

    #[test]
    fn case_one_is_smallest() {
        for i in 1..600 {
            let theta = PI / 6.0 * i as f64 / 600.0;
            let g = g1(theta).unwrap();
            for case in CollisionCase::ALL {
                assert!(case_bound(case, theta).unwrap() >= g);
            }
        }
    }

    #[test]
    fn numeric_minimization_attains_the_formula() {
        let p = kp(1.0, 1.0, 1.0, PI / 2.0);
        let r = kepler_numeric_inf(p, 60).unwrap();
        let exact = kepler_inf(p);
        assert!(r.opt.converged(), "{:?} {} {} {}", r.opt.reason, r.opt.proj_grad_norm, r.opt.iterations, r.action);
        assert!((r.action - exact).abs() / exact < 1e-2, "{} vs {exact}", r.action);
        // A polygon inscribed in the optimal circle: radii roughly constant.
        let radius = r.nodes[30].norm();
        let expect = (1.0 / (PI / 2.0).powi(2)).cbrt();
        assert!((radius - expect).abs() / expect < 1e-2);
    }
}
