//! Extending a minimizer on `[0, 1]` to a solution on the whole line.
//!
//! The start configuration is collinear, so the path continues backwards as
//! its mirror image `q(−t) = q(t)·B`. The end configuration is fixed by
//! swapping the pairs and applying `B·R(2θ)`, which continues the path to
//! `[1, 2]`. Two such pieces, rotated, give a block on `[0, 4]`, and every
//! later block is the first one rotated by a multiple of `4θ`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::action::DiscretePath;
use crate::error::{Error, Result};
use crate::geometry::{membership, BoundarySet, ReducedConfig};
use crate::minimizer::boundary_velocity;

const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Closure {
    /// `θ/π = k1/l1` in lowest terms; the orbit repeats after `period = 4·l1`.
    Periodic { period: u64, k1: u64, l1: u64 },
    QuasiPeriodic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedOrbit {
    pub theta: f64,
    pub base: DiscretePath,
    /// Number of `[0, 4]` blocks.
    pub blocks: usize,
    /// Nodes on `[0, 4·blocks]` with the step of the base path.
    pub path: DiscretePath,
    pub closure: Closure,
}

fn check_start(path: &DiscretePath) -> Result<()> {
    membership(path.first(), BoundarySet::Start, MEMBERSHIP_TOL)
        .map(|_| ())
        .ok_or(Error::BoundaryMembership("V0"))
}

/// The end configuration is accepted from either end set: the fixing map
/// does not depend on the signs of `b1, b2`.
fn check_end(path: &DiscretePath, theta: f64) -> Result<()> {
    membership(path.last(), BoundarySet::Retrograde(theta), MEMBERSHIP_TOL)
        .map(|_| ())
        .ok_or(Error::BoundaryMembership("V1(theta)"))
}

/// `swap(c)·B·R(2θ)`: the map fixing end configurations.
pub fn end_reflection(c: &ReducedConfig, theta: f64) -> ReducedConfig {
    c.swap().reflect_x().rotate(2.0 * theta)
}

/// Path on `[−1, 1]`, the negative half being `q(−t)·B`.
pub fn reflect_t0(path: &DiscretePath) -> Result<DiscretePath> {
    check_start(path)?;
    let mut nodes: Vec<ReducedConfig> = path.nodes[1..].iter().rev().map(|c| c.reflect_x()).collect();
    nodes.extend_from_slice(&path.nodes);
    let span = path.t_end - path.t_start;
    DiscretePath::with_span(nodes, path.t_start - span, path.t_end)
}

/// Path on `[0, 2]`; node `2n − j` is node `j` under [`end_reflection`].
pub fn reflect_t1(path: &DiscretePath, theta: f64) -> Result<DiscretePath> {
    check_end(path, theta)?;
    let n = path.n_segments();
    let mut nodes = path.nodes.clone();
    nodes.extend((0..n).rev().map(|j| end_reflection(&path.nodes[j], theta)));
    let span = path.t_end - path.t_start;
    DiscretePath::with_span(nodes, path.t_start, path.t_end + span)
}

/// Orbit on `[0, 4k]` built block by block from a path on `[0, 1]`.
pub fn extend_full(path: &DiscretePath, theta: f64, k: usize) -> Result<ExtendedOrbit> {
    if k == 0 {
        return Err(Error::Domain("need at least one block".into()));
    }
    check_start(path)?;
    let half = reflect_t1(path, theta)?;
    let n2 = half.n_segments();
    let mut block = half.nodes.clone();
    block.extend(half.nodes[1..].iter().map(|c| c.swap().rotate(2.0 * theta)));
    let mut nodes = block.clone();
    for m in 1..k {
        let phi = 4.0 * m as f64 * theta;
        nodes.extend(block[1..].iter().map(|c| c.rotate(phi)));
    }
    debug_assert_eq!(nodes.len(), 2 * n2 * k + 1);
    let t0 = path.t_start;
    let span = 4.0 * k as f64 * (path.t_end - path.t_start);
    Ok(ExtendedOrbit {
        theta,
        base: path.clone(),
        blocks: k,
        path: DiscretePath::with_span(nodes, t0, t0 + span)?,
        closure: detect_closure(theta, 64, 1e-9),
    })
}

/// Classifies `θ/π` by its continued-fraction convergents with denominator
/// at most `denom_max`.
pub fn detect_closure(theta: f64, denom_max: u64, tol: f64) -> Closure {
    let x = theta / std::f64::consts::PI;
    if !x.is_finite() || x < 0.0 {
        return Closure::QuasiPeriodic;
    }
    // Convergents h/k with h_{-1}=1, h_{-2}=0, k_{-1}=0, k_{-2}=1.
    let (mut h0, mut h1) = (0u64, 1u64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        if a > 1e15 {
            break;
        }
        let a = a as u64;
        let h = a.saturating_mul(h1).saturating_add(h0);
        let k = a.saturating_mul(k1).saturating_add(k0);
        if k > denom_max {
            break;
        }
        if (x - h as f64 / k as f64).abs() <= tol {
            return Closure::Periodic { period: 4 * k, k1: h, l1: k };
        }
        (h0, h1, k0, k1) = (h1, h, k1, k);
        let frac = rest - a as f64;
        if frac == 0.0 {
            break;
        }
        rest = 1.0 / frac;
    }
    Closure::QuasiPeriodic
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JunctionReport {
    /// Interior junction times `1, 2, …, 4k − 1`.
    pub times: Vec<f64>,
    /// `|v⁻ − v⁺|` over both reduced bodies, from one-sided differences.
    pub mismatch: Vec<f64>,
    pub max_speed: f64,
}

impl JunctionReport {
    pub fn max_relative(&self) -> f64 {
        self.mismatch.iter().cloned().fold(0.0, f64::max) / self.max_speed
    }
}

/// Velocity jumps at the unit-time junctions of an extended orbit.
pub fn junction_c1_check(orbit: &ExtendedOrbit) -> Result<JunctionReport> {
    let n = orbit.base.n_segments();
    if n < 4 {
        return Err(Error::Domain(format!("need at least 4 segments per unit, got {n}")));
    }
    let nodes = &orbit.path.nodes;
    let h = orbit.path.dt();
    let units = 4 * orbit.blocks;
    let mut report = JunctionReport {
        times: Vec::with_capacity(units - 1),
        mismatch: Vec::with_capacity(units - 1),
        max_speed: nodes
            .windows(2)
            .map(|w| (w[1].q1 - w[0].q1).norm().max((w[1].q2 - w[0].q2).norm()) / h)
            .fold(0.0, f64::max),
    };
    for m in 1..units {
        let j = m * n;
        let left = DiscretePath::with_span(nodes[j - n..=j].to_vec(), 0.0, 1.0)?;
        let right = DiscretePath::with_span(nodes[j..=j + n].to_vec(), 0.0, 1.0)?;
        let (l1, l2) = boundary_velocity(&left, true);
        let (r1, r2) = boundary_velocity(&right, false);
        report.times.push(orbit.path.time(j));
        report.mismatch.push(((l1 - r1).norm_sq() + (l2 - r2).norm_sq()).sqrt());
    }
    Ok(report)
}

impl ExtendedOrbit {
    /// CSV with columns `t,q1x,q1y,q2x,q2y,q3x,q3y,q4x,q4y`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,q1x,q1y,q2x,q2y,q3x,q3y,q4x,q4y")?;
        for (j, c) in self.path.nodes.iter().enumerate() {
            write!(w, "{:.16e}", self.path.time(j))?;
            for q in c.full() {
                write!(w, ",{:.16e},{:.16e}", q.x, q.y)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::path_action;
    use crate::geometry::{end_config, EndParams, PlanarVec};
    use crate::testpath::build_test_path;
    use std::f64::consts::PI;

    #[test]
    fn closure_examples() {
        assert_eq!(
            detect_closure(PI / 7.0, 64, 1e-9),
            Closure::Periodic { period: 28, k1: 1, l1: 7 }
        );
        assert_eq!(
            detect_closure(PI / 10.0, 64, 1e-9),
            Closure::Periodic { period: 40, k1: 1, l1: 10 }
        );
        assert_eq!(detect_closure(0.004 * PI, 64, 1e-9), Closure::QuasiPeriodic);
        assert_eq!(detect_closure(PI / 2f64.sqrt() / 10.0, 64, 1e-9), Closure::QuasiPeriodic);
        assert_eq!(detect_closure(0.1234567, 64, 1e-9), Closure::QuasiPeriodic);
        assert_eq!(
            detect_closure(3.0 * PI / 20.0, 64, 1e-9),
            Closure::Periodic { period: 80, k1: 3, l1: 20 }
        );
    }

    #[test]
    fn end_configurations_are_fixed() {
        for (b1, b2, th) in [(1.0, 0.5, 0.3), (2.0, -0.7, 1.1), (0.0, 1.0, 0.01)] {
            let c = end_config(EndParams::new(b1, b2, th));
            assert!(end_reflection(&c, th).max_abs_diff(&c) < 1e-14);
        }
    }

    #[test]
    fn reflections_at_both_ends() {
        let path = build_test_path(0.05 * PI).unwrap();
        let r0 = reflect_t0(&path).unwrap();
        assert_eq!(r0.n_segments(), 20);
        assert_eq!(r0.t_start, -1.0);
        assert_eq!(r0.nodes[10], path.nodes[0]);
        assert_eq!(r0.nodes[7].q1, PlanarVec::new(path.nodes[3].q1.x, -path.nodes[3].q1.y));

        let r1 = reflect_t1(&path, 0.05 * PI).unwrap();
        assert_eq!(r1.n_segments(), 20);
        assert_eq!(r1.nodes[13], end_reflection(&path.nodes[7], 0.05 * PI));
        let a = path_action(&path).unwrap().total;
        assert!((path_action(&r1).unwrap().total - 2.0 * a).abs() < 1e-10);
        assert!((path_action(&r0).unwrap().total - 2.0 * a).abs() < 1e-10);

        let mut bad = path.clone();
        bad.nodes[0].q1.y = 0.1;
        assert!(matches!(reflect_t0(&bad), Err(Error::BoundaryMembership(_))));
        assert!(reflect_t1(&path, 0.07 * PI).is_err());
    }

    #[test]
    fn square_end_reflects_across_x_axis() {
        let c = end_config(EndParams::new(1.0, 1.0, 0.0));
        let other = ReducedConfig::new(PlanarVec::new(-2.0, -0.5), PlanarVec::new(-0.5, 1.5));
        let path = DiscretePath::new(vec![other, c]).unwrap();
        let r = reflect_t1(&path, 0.0).unwrap();
        assert_eq!(r.nodes[2], other.swap().reflect_x());
    }

    #[test]
    fn blocks_rotate_and_compose() {
        let theta = 0.05 * PI;
        let path = build_test_path(theta).unwrap();
        let orbit = extend_full(&path, theta, 3).unwrap();
        let n = path.n_segments();
        let nodes = &orbit.path.nodes;
        assert_eq!(nodes.len(), 12 * n + 1);
        for j in 0..=8 * n {
            let d = nodes[j + 4 * n].max_abs_diff(&nodes[j].rotate(4.0 * theta));
            assert!(d < 1e-12, "{j}: {d}");
        }
        // The [2, 4] branch equals the mirror of [0, 2] about the line at angle 2θ.
        for s in 0..=2 * n {
            let mirrored = nodes[2 * n - s].rotate(-2.0 * theta).reflect_x().rotate(2.0 * theta);
            assert!(nodes[2 * n + s].max_abs_diff(&mirrored) < 1e-12);
        }
        let mut buf = Vec::new();
        orbit.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "t,q1x,q1y,q2x,q2y,q3x,q3y,q4x,q4y");
        assert_eq!(text.lines().count(), 12 * n + 2);
        let junctions = junction_c1_check(&orbit).unwrap();
        assert_eq!(junctions.times.len(), 11);
        // The coarse test path is not stationary, so the velocities jump.
        assert!(junctions.max_relative() > 1e-3);
    }
}
