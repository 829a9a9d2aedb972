//! Minimizing the discrete action between the start set and an end set.
//!
//! The free parameters are the start radii `(a1, a2)`, the interior nodes and
//! the end radii `(b1, b2)`; the boundary nodes are always rebuilt from them,
//! so every iterate is feasible by construction. The prograde family keeps all
//! four radii nonnegative; the retrograde family only the start radii.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::action::{action_and_node_gradient, path_action, ActionBreakdown, DiscretePath};
use crate::error::{Error, Result};
use crate::geometry::{
    end_config, membership, rotate, start_config, BoundaryParams, BoundarySet, EndParams,
    PlanarVec, ReducedConfig, StartParams,
};
use crate::optim::{minimize_bounded, projected_gradient_norm, LbfgsOptions, StopReason};
use crate::testpath::build_test_path;
use crate::zgeom::reflect_path_z;

/// Upper end of the tabulated range; beyond it there is no test path.
pub const TEST_PATH_LIMIT: f64 = 0.143 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// End radii constrained to `b1, b2 ≥ 0`.
    Prograde,
    /// End radii free in sign.
    Retrograde,
}

impl Family {
    pub fn end_set(self, theta: f64) -> BoundarySet {
        match self {
            Family::Prograde => BoundarySet::Prograde(theta),
            Family::Retrograde => BoundarySet::Retrograde(theta),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Upsampled test path (reflected into the retrograde set for that family).
    FromTestPath,
    FromGiven(DiscretePath),
    StraightLine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    pub max_iters: usize,
    /// Target for the RMS projected gradient.
    pub grad_tol: f64,
    pub step_tol: f64,
    /// Softening lengths for successive stages. A final unsoftened stage is
    /// always run, whether or not the schedule ends in 0.
    pub softening_schedule: Vec<f64>,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            max_iters: 100_000,
            grad_tol: 1e-8,
            step_tol: 1e-15,
            softening_schedule: vec![1e-3, 1e-4, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub theta: f64,
    pub n_segments: usize,
    pub family: Family,
    pub init: Init,
    pub options: Options,
}

impl Problem {
    pub fn new(theta: f64, n_segments: usize, family: Family) -> Result<Self> {
        if !(theta > 0.0 && theta < PI / 2.0) {
            return Err(Error::Domain(format!("theta={theta} outside (0, pi/2)")));
        }
        if n_segments < 10 {
            return Err(Error::Domain(format!("n_segments={n_segments} below 10")));
        }
        let init = if theta <= TEST_PATH_LIMIT {
            Init::FromTestPath
        } else {
            Init::StraightLine
        };
        Ok(Self {
            theta,
            n_segments,
            family,
            init,
            options: Options::default(),
        })
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn with_options(mut self, options: Options) -> Self {
        self.options = options;
        self
    }

    pub fn dim(&self) -> usize {
        4 * self.n_segments
    }

    /// Lower bounds on the decision vector.
    pub fn lower_bounds(&self) -> Vec<f64> {
        let dim = self.dim();
        let mut lower = vec![f64::NEG_INFINITY; dim];
        lower[0] = 0.0;
        lower[1] = 0.0;
        if self.family == Family::Prograde {
            lower[dim - 2] = 0.0;
            lower[dim - 1] = 0.0;
        }
        lower
    }

    /// Clamps sign-constrained parameters onto their bounds.
    pub fn project(&self, v: &mut [f64]) {
        for (x, lo) in v.iter_mut().zip(self.lower_bounds()) {
            if *x < lo {
                *x = lo;
            }
        }
    }

    /// Flattens a path with boundary nodes in `V0` and the family's end set to
    /// `[a1, a2, (q1x, q1y, q2x, q2y) × (n − 1), b1, b2]`.
    pub fn encode(&self, path: &DiscretePath) -> Result<Vec<f64>> {
        if path.n_segments() != self.n_segments {
            return Err(Error::DimensionMismatch {
                expected: self.n_segments,
                got: path.n_segments(),
            });
        }
        let Some(BoundaryParams::Start(a)) = membership(path.first(), BoundarySet::Start, 1e-9)
        else {
            return Err(Error::BoundaryMembership("V0"));
        };
        let set = self.family.end_set(self.theta);
        let Some(BoundaryParams::End(b)) = membership(path.last(), set, 1e-9) else {
            return Err(Error::BoundaryMembership(set.name()));
        };
        let mut v = Vec::with_capacity(self.dim());
        v.extend([a.a1, a.a2]);
        for c in &path.nodes[1..self.n_segments] {
            v.extend([c.q1.x, c.q1.y, c.q2.x, c.q2.y]);
        }
        v.extend([b.b1, b.b2]);
        Ok(v)
    }

    pub fn decode(&self, v: &[f64]) -> Result<DiscretePath> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        let n = self.n_segments;
        let mut nodes = Vec::with_capacity(n + 1);
        nodes.push(ReducedConfig::new(
            PlanarVec::new(-v[0] - v[1], 0.0),
            PlanarVec::new(-v[0], 0.0),
        ));
        for c in v[2..4 * n - 2].chunks_exact(4) {
            nodes.push(ReducedConfig::new(PlanarVec::new(c[0], c[1]), PlanarVec::new(c[2], c[3])));
        }
        nodes.push(end_config(EndParams::new(v[4 * n - 2], v[4 * n - 1], self.theta)));
        DiscretePath::new(nodes)
    }

    /// Softened action of the decoded path and its gradient in the decision vector.
    pub fn objective_softened(&self, v: &[f64], eps: f64) -> Result<(f64, Vec<f64>)> {
        let path = self.decode(v)?;
        let (f, g) = action_and_node_gradient(&path, eps)?;
        let n = self.n_segments;
        let mut out = Vec::with_capacity(self.dim());
        let g0 = g[0];
        out.push(-g0.q1.x - g0.q2.x);
        out.push(-g0.q1.x);
        for c in &g[1..n] {
            out.extend([c.q1.x, c.q1.y, c.q2.x, c.q2.y]);
        }
        let (s, c) = self.theta.sin_cos();
        let gn = g[n];
        let dir_b1 = PlanarVec::new(-c, -s);
        out.push(gn.q1.dot(dir_b1) + gn.q2.dot(dir_b1));
        out.push(gn.q1.dot(PlanarVec::new(s, -c)) + gn.q2.dot(PlanarVec::new(-s, c)));
        Ok((f, out))
    }

    /// Exact action and its gradient.
    pub fn objective_and_gradient(&self, v: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.objective_softened(v, 0.0)
    }

    /// RMS of the projected gradient at `v`.
    pub fn grad_norm(&self, v: &[f64], g: &[f64]) -> f64 {
        projected_gradient_norm(v, g, &self.lower_bounds()) / (self.dim() as f64).sqrt()
    }

    /// Starting path according to `init`, on `n_segments`.
    pub fn initial_path(&self) -> Result<DiscretePath> {
        let n = self.n_segments;
        match &self.init {
            Init::FromTestPath => {
                if self.theta > TEST_PATH_LIMIT {
                    return Err(Error::Domain(format!(
                        "no test path for theta={} beyond 0.143pi",
                        self.theta
                    )));
                }
                let path = build_test_path(self.theta)?.upsample(n)?;
                Ok(match self.family {
                    Family::Prograde => path,
                    Family::Retrograde => reflect_path_z(&path),
                })
            }
            Init::FromGiven(path) => {
                if path.n_segments() == n {
                    Ok(path.clone())
                } else {
                    path.upsample(n)
                }
            }
            Init::StraightLine => {
                let b2 = match self.family {
                    Family::Prograde => 0.5,
                    Family::Retrograde => -0.5,
                };
                let a = start_config(StartParams::new(1.0, 1.0)?)?;
                let b = end_config(EndParams::new(1.5, b2, self.theta));
                DiscretePath::new(vec![a, b])?.upsample(n)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub theta: f64,
    pub family: Family,
    pub n_segments: usize,
    pub action: ActionBreakdown,
    pub start_params: StartParams,
    pub end_params: EndParams,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Why the last stage stopped, and how many trial points hit collisions.
    pub stop_reason: String,
    pub rejected_steps: usize,
    pub initial_action: f64,
    pub path: DiscretePath,
}

impl Solution {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Runs the softening stages and a final exact stage.
pub fn minimize(problem: &Problem) -> Result<Solution> {
    let initial = problem.initial_path()?;
    let mut v0 = problem.encode(&initial)?;
    problem.project(&mut v0);
    let (f_init, _) = problem.objective_and_gradient(&v0)?;
    let lower = problem.lower_bounds();
    let opts = &problem.options;
    let scaled = |tol: f64| LbfgsOptions {
        max_iters: opts.max_iters,
        grad_tol: tol,
        step_tol: opts.step_tol,
        ..LbfgsOptions::default()
    };

    let mut v = v0.clone();
    let mut iterations = 0;
    let mut rejected = 0;
    for &eps in opts.softening_schedule.iter().filter(|&&e| e > 0.0) {
        let stage = minimize_bounded(
            |x| problem.objective_softened(x, eps),
            &v,
            &lower,
            &scaled(opts.grad_tol.max(1e-6)),
        );
        // A softened stage can fail where the exact objective would not; keep going.
        if let Ok(r) = stage {
            iterations += r.iterations;
            rejected += r.rejected;
            v = r.x;
        }
    }
    // Never start the exact stage from a point worse than the initial path.
    let start = match problem.objective_and_gradient(&v) {
        Ok((f, _)) if f <= f_init => v,
        _ => v0,
    };
    let r = minimize_bounded(
        |x| problem.objective_and_gradient(x),
        &start,
        &lower,
        &scaled(opts.grad_tol),
    )?;
    iterations += r.iterations;
    rejected += r.rejected;

    let path = problem.decode(&r.x)?;
    let action = path_action(&path)?;
    let n = problem.n_segments;
    let grad_norm = problem.grad_norm(&r.x, &r.grad);
    Ok(Solution {
        theta: problem.theta,
        family: problem.family,
        n_segments: n,
        action,
        start_params: StartParams { a1: r.x[0], a2: r.x[1] },
        end_params: EndParams::new(r.x[4 * n - 2], r.x[4 * n - 1], problem.theta),
        grad_norm,
        iterations,
        converged: grad_norm <= opts.grad_tol,
        stop_reason: match r.reason {
            StopReason::Converged => "converged",
            StopReason::MaxIterations => "iteration limit reached",
            StopReason::SmallStep => "steps below step tolerance",
            StopReason::LineSearchFailed => "line search found no acceptable step",
        }
        .to_string(),
        rejected_steps: rejected,
        initial_action: f_init,
        path,
    })
}

/// Acceleration of bodies 1 and 2 under the symmetric four-body force.
pub fn acceleration(c: &ReducedConfig) -> (PlanarVec, PlanarVec) {
    let [q1, q2, q3, q4] = c.full();
    let pull = |from: PlanarVec, to: PlanarVec| {
        let d = to - from;
        let r2 = d.norm_sq();
        d * (1.0 / (r2 * r2.sqrt()))
    };
    (
        pull(q1, q2) + pull(q1, q3) + pull(q1, q4),
        pull(q2, q1) + pull(q2, q3) + pull(q2, q4),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// Norm of `(q_{j+1} − 2 q_j + q_{j−1})/h² − acc(q_j)` over both bodies,
    /// for interior nodes `j = 1..n−1`.
    pub per_node: Vec<f64>,
    pub max: f64,
}

/// Residual of Newton's equations at the interior nodes of a path.
pub fn euler_lagrange_residual(path: &DiscretePath) -> ResidualReport {
    let h = path.dt();
    let per_node: Vec<f64> = path
        .nodes
        .windows(3)
        .map(|w| {
            let (a1, a2) = acceleration(&w[1]);
            let d1 = (w[2].q1 - w[1].q1 * 2.0 + w[0].q1) * (1.0 / (h * h)) - a1;
            let d2 = (w[2].q2 - w[1].q2 * 2.0 + w[0].q2) * (1.0 / (h * h)) - a2;
            (d1.norm_sq() + d2.norm_sq()).sqrt()
        })
        .collect();
    let max = per_node.iter().cloned().fold(0.0, f64::max);
    ResidualReport { per_node, max }
}

/// Velocity of both bodies at the first node (`forward`) or last node from a
/// fourth-order one-sided difference.
pub fn boundary_velocity(path: &DiscretePath, at_end: bool) -> (PlanarVec, PlanarVec) {
    const W: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
    let n = path.n_segments();
    let h = path.dt();
    let mut v1 = PlanarVec::ZERO;
    let mut v2 = PlanarVec::ZERO;
    for (k, w) in W.iter().enumerate() {
        let c = if at_end { path.nodes[n - k] } else { path.nodes[k] };
        v1 += c.q1 * *w;
        v2 += c.q2 * *w;
    }
    let s = if at_end { -1.0 } else { 1.0 } / (12.0 * h);
    (v1 * s, v2 * s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryVelocityReport {
    /// `ẋ` of bodies 1..4 at `t = 0`.
    pub xdot_at_start: [f64; 4],
    /// `|q̇1(1) + q̇2(1)·B·R(2θ)|`.
    pub end_mismatch: f64,
    /// Largest segment speed of any body along the path.
    pub max_speed: f64,
}

impl BoundaryVelocityReport {
    /// Largest residual divided by the speed scale.
    pub fn relative(&self) -> f64 {
        let start = self.xdot_at_start.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        start.max(self.end_mismatch) / self.max_speed
    }
}

/// First-variation conditions at both ends of a minimizer in the prograde family.
pub fn boundary_velocity_residuals(path: &DiscretePath, theta: f64) -> BoundaryVelocityReport {
    let (u1, u2) = boundary_velocity(path, false);
    let (w1, w2) = boundary_velocity(path, true);
    let h = path.dt();
    let max_speed = path
        .nodes
        .windows(2)
        .map(|w| (w[1].q1 - w[0].q1).norm().max((w[1].q2 - w[0].q2).norm()) / h)
        .fold(0.0, f64::max);
    BoundaryVelocityReport {
        xdot_at_start: [u1.x, u2.x, -u2.x, -u1.x],
        end_mismatch: (w1 + rotate(w2.reflect_x(), 2.0 * theta)).norm(),
        max_speed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testpath::test_action;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn decision_vector_layout() {
        let p = Problem::new(0.05 * PI, 10, Family::Prograde).unwrap();
        assert_eq!(p.dim(), 40);
        let path = p.initial_path().unwrap();
        let v = p.encode(&path).unwrap();
        assert_eq!(v.len(), 40);
        let back = p.decode(&v).unwrap();
        for (a, b) in back.nodes.iter().zip(&path.nodes) {
            assert!(a.max_abs_diff(b) < 1e-12);
        }
        assert_eq!(p.encode(&back).unwrap().len(), 40);
        assert!(matches!(p.decode(&v[1..]), Err(Error::DimensionMismatch { .. })));
        let mut w = v.clone();
        w[0] = -1.0;
        w[39] = -2.0;
        p.project(&mut w);
        assert_eq!((w[0], w[39]), (0.0, 0.0));
        assert!(Problem::new(0.05 * PI, 9, Family::Prograde).is_err());
        assert!(Problem::new(0.6 * PI, 10, Family::Prograde).is_err());
    }

    #[test]
    fn objective_matches_test_action() {
        let p = Problem::new(0.05 * PI, 10, Family::Prograde).unwrap();
        let v = p.encode(&p.initial_path().unwrap()).unwrap();
        let (f, _) = p.objective_and_gradient(&v).unwrap();
        let t = test_action(0.05 * PI).unwrap().total;
        assert!((f - t).abs() < 1e-12 * t);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for family in [Family::Prograde, Family::Retrograde] {
            let p = Problem::new(0.1 * PI, 12, family).unwrap();
            let base = p.encode(&p.initial_path().unwrap()).unwrap();
            for _ in 0..5 {
                let v: Vec<f64> = base.iter().map(|x| x + rng.random_range(-0.05..0.05)).collect();
                let (_, g) = p.objective_and_gradient(&v).unwrap();
                for i in 0..v.len() {
                    let h = 1e-6;
                    let mut a = v.clone();
                    let mut b = v.clone();
                    a[i] += h;
                    b[i] -= h;
                    let fd = (p.objective_and_gradient(&a).unwrap().0
                        - p.objective_and_gradient(&b).unwrap().0)
                        / (2.0 * h);
                    assert!((fd - g[i]).abs() <= 1e-5 * g[i].abs().max(1.0), "{i}: {fd} {}", g[i]);
                }
            }
        }
    }

    #[test]
    fn constant_path_has_no_kinetic_gradient() {
        let c = ReducedConfig::new(PlanarVec::new(-2.0, 0.3), PlanarVec::new(-1.0, 0.7));
        let path = DiscretePath::new(vec![c; 6]).unwrap();
        let (_, g) = action_and_node_gradient(&path, 0.0).unwrap();
        let (u1, u2) = acceleration(&c);
        // Only the potential remains, and ∇U = 2·acceleration in reduced form.
        let dt = path.dt();
        let expect = ReducedConfig::new(u1 * (2.0 * dt), u2 * (2.0 * dt));
        assert!(g[2].max_abs_diff(&expect) < 1e-9);
    }

    #[test]
    fn short_minimization_descends() {
        let mut p = Problem::new(0.05 * PI, 10, Family::Prograde).unwrap();
        p.options.grad_tol = 1e-7;
        let s = minimize(&p).unwrap();
        assert!(s.converged, "{} {}", s.grad_norm, s.stop_reason);
        assert!(s.action.total <= test_action(0.05 * PI).unwrap().total);
        assert!(s.end_params.b1 >= 0.0 && s.end_params.b2 >= 0.0);
        let json = s.to_json().unwrap();
        assert_eq!(Solution::from_json(&json).unwrap(), s);
    }

    #[test]
    fn rotating_square_has_machine_level_residual() {
        let n = 40;
        let h = 1.0 / n as f64;
        let omega = 1.3;
        let k = 0.5f64.sqrt() + 0.25;
        let lam = 4.0 / (h * h) * (omega * h / 2.0).sin().powi(2);
        let r = (k / lam).cbrt();
        let nodes = (0..=n)
            .map(|j| {
                let phi = omega * j as f64 * h;
                ReducedConfig::new(
                    PlanarVec::new(r * phi.cos(), r * phi.sin()),
                    PlanarVec::new(-r * phi.sin(), r * phi.cos()),
                )
            })
            .collect();
        let rep = euler_lagrange_residual(&DiscretePath::new(nodes).unwrap());
        assert_eq!(rep.per_node.len(), n - 1);
        assert!(rep.max < 1e-10, "{}", rep.max);

        let c = ReducedConfig::new(PlanarVec::new(-2.0, 0.0), PlanarVec::new(-1.0, 0.5));
        let rep = euler_lagrange_residual(&DiscretePath::new(vec![c; 3]).unwrap());
        let (a1, a2) = acceleration(&c);
        assert!((rep.max - (a1.norm_sq() + a2.norm_sq()).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn one_sided_velocity_is_exact_for_quartics() {
        let nodes = (0..=20)
            .map(|j| {
                let t = j as f64 / 20.0;
                ReducedConfig::new(
                    PlanarVec::new(t.powi(4) - t, 2.0 * t * t),
                    PlanarVec::new(3.0 * t, -t.powi(3)),
                )
            })
            .collect();
        let path = DiscretePath::new(nodes).unwrap();
        let (v1, v2) = boundary_velocity(&path, false);
        assert!((v1.x + 1.0).abs() < 1e-10 && v1.y.abs() < 1e-10);
        assert!((v2.x - 3.0).abs() < 1e-10 && v2.y.abs() < 1e-10);
        let (w1, w2) = boundary_velocity(&path, true);
        assert!((w1.x - 3.0).abs() < 1e-9 && (w1.y - 4.0).abs() < 1e-9);
        assert!((w2.x - 3.0).abs() < 1e-9 && (w2.y + 3.0).abs() < 1e-9);
    }
}
