//! Exact action of piecewise-linear paths.
//!
//! On each time segment both reduced positions move at constant speed, so the
//! kinetic integral is a finite difference and every pair potential reduces to
//! `∫₀¹ du / |p + u (e − p)|`, which has a closed form. The closed form here is
//! arranged to avoid the cancellation of the textbook logarithm: depending on
//! where the foot of the perpendicular from the origin falls, it is written
//! as a `ln_1p` of a small quantity or as a difference of `asinh` terms.
//!
//! Internally the kernel works on 3-vectors so that a softening length can be
//! carried as a constant third component; unsoftened use sets it to zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Pair, Result};
use crate::geometry::{PlanarVec, ReducedConfig};

/// Segments closer than this to the origin are treated as collisions.
pub const COLLISION_DISTANCE: f64 = 1e-12;

/// Below this squared direction length a segment is treated as a point.
pub const DEGENERATE_LEN_SQ: f64 = 1e-24;

/// Relative vector of each pair as `c1·q1 + c2·q2`, and its potential weight.
///
/// `U = 2/|q1−q2| + 2/|q1+q2| + 1/|2q1| + 1/|2q2|`.
pub(crate) const PAIR_COEFFS: [(f64, f64, f64); 4] =
    [(1.0, -1.0, 2.0), (1.0, 1.0, 2.0), (2.0, 0.0, 1.0), (0.0, 2.0, 1.0)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePath {
    pub nodes: Vec<ReducedConfig>,
    pub t_start: f64,
    pub t_end: f64,
}

impl DiscretePath {
    /// Path on the unit interval.
    pub fn new(nodes: Vec<ReducedConfig>) -> Result<Self> {
        Self::with_span(nodes, 0.0, 1.0)
    }

    pub fn with_span(nodes: Vec<ReducedConfig>, t_start: f64, t_end: f64) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::ConstraintViolation(format!(
                "a path needs at least 2 nodes, got {}",
                nodes.len()
            )));
        }
        if !(t_end > t_start) {
            return Err(Error::ConstraintViolation(format!(
                "empty time span [{t_start}, {t_end}]"
            )));
        }
        Ok(Self { nodes, t_start, t_end })
    }

    pub fn n_segments(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_segments() as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t_start + (self.t_end - self.t_start) * j as f64 / self.n_segments() as f64
    }

    pub fn first(&self) -> &ReducedConfig {
        &self.nodes[0]
    }

    pub fn last(&self) -> &ReducedConfig {
        &self.nodes[self.nodes.len() - 1]
    }

    /// Linear interpolation at time `t`, clamped to the span.
    pub fn at(&self, t: f64) -> ReducedConfig {
        let n = self.n_segments();
        let s = ((t - self.t_start) / (self.t_end - self.t_start)).clamp(0.0, 1.0) * n as f64;
        let j = (s.floor() as usize).min(n - 1);
        let u = s - j as f64;
        let (a, b) = (&self.nodes[j], &self.nodes[j + 1]);
        ReducedConfig::new(a.q1 + (b.q1 - a.q1) * u, a.q2 + (b.q2 - a.q2) * u)
    }

    /// Every node right-multiplied by `R(phi)`.
    pub fn rotated(&self, phi: f64) -> Self {
        self.map_nodes(|c| c.rotate(phi))
    }

    pub fn reversed(&self) -> Self {
        let mut nodes = self.nodes.clone();
        nodes.reverse();
        Self { nodes, ..*self }
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        self.map_nodes(|c| ReducedConfig::new(c.q1 * lambda, c.q2 * lambda))
    }

    pub fn map_nodes(&self, f: impl Fn(&ReducedConfig) -> ReducedConfig) -> Self {
        Self {
            nodes: self.nodes.iter().map(f).collect(),
            t_start: self.t_start,
            t_end: self.t_end,
        }
    }

    /// Linear resampling onto `n` uniform segments over the same span.
    pub fn upsample(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::ConstraintViolation("resampling to 0 segments".into()));
        }
        let nodes = (0..=n)
            .map(|j| self.at(self.t_start + (self.t_end - self.t_start) * j as f64 / n as f64))
            .collect();
        Self::with_span(nodes, self.t_start, self.t_end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ActionBreakdown {
    pub total: f64,
    pub a12: f64,
    pub a13: f64,
    pub a14: f64,
    pub a23: f64,
    pub kinetic: f64,
    pub potential: f64,
}

pub(crate) type V3 = [f64; 3];

#[inline]
fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn axpy(s: f64, x: V3, y: V3) -> V3 {
    [s * x[0] + y[0], s * x[1] + y[1], s * x[2] + y[2]]
}

#[inline]
fn scale(s: f64, x: V3) -> V3 {
    [s * x[0], s * x[1], s * x[2]]
}

#[inline]
fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
fn cross_norm(a: V3, b: V3) -> f64 {
    let c = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    norm(c)
}

#[inline]
pub(crate) fn lift(v: PlanarVec, eps: f64) -> V3 {
    [v.x, v.y, eps]
}

/// Geometry of the segment `r(u) = p + u d`, `u ∈ [0, 1]`, relative to the origin.
struct Segment {
    np: f64,
    ne: f64,
    len: f64,
    /// Signed projections of `p` and `e` on the unit direction.
    sp: f64,
    se: f64,
    /// `ne − np`, computed without cancellation.
    dn: f64,
}

impl Segment {
    fn new(p: V3, e: V3) -> Option<Self> {
        let d = sub(e, p);
        let l2 = dot(d, d);
        if l2 < DEGENERATE_LEN_SQ {
            return None;
        }
        let len = l2.sqrt();
        let np = norm(p);
        let ne = norm(e);
        let pd = dot(p, d);
        let sp = pd / len;
        Some(Self {
            np,
            ne,
            len,
            sp,
            se: sp + len,
            dn: (2.0 * pd + l2) / (ne + np),
        })
    }

    fn integral(&self, p: V3, e: V3) -> Result<f64> {
        let Segment { np, ne, len, sp, se, dn } = *self;
        if sp >= 0.0 {
            check_distance(np)?;
            Ok(((dn + len) / (np + sp)).ln_1p() / len)
        } else if se <= 0.0 {
            check_distance(ne)?;
            Ok(((len - dn) / (ne - se)).ln_1p() / len)
        } else {
            let h = cross_norm(p, e) / len;
            check_distance(h)?;
            Ok(((se / h).asinh() - (sp / h).asinh()) / len)
        }
    }
}

fn check_distance(distance: f64) -> Result<()> {
    if distance < COLLISION_DISTANCE {
        Err(Error::SegmentCollision { distance })
    } else {
        Ok(())
    }
}

/// Minimum of `|p + u(e − p)|` over `u ∈ [0, 1]`.
pub fn segment_min_distance(p: PlanarVec, e: PlanarVec) -> f64 {
    let d = e - p;
    let l2 = d.norm_sq();
    if l2 == 0.0 {
        return p.norm();
    }
    let u = (-p.dot(d) / l2).clamp(0.0, 1.0);
    if u == 0.0 {
        p.norm()
    } else if u == 1.0 {
        e.norm()
    } else {
        p.cross(e).abs() / l2.sqrt()
    }
}

/// Smallest distance to collision over all pairs and segments, with the
/// pair and segment where it occurs. Distances are between the two bodies.
pub fn path_clearance(path: &DiscretePath) -> (f64, Pair, usize) {
    let mut best = (f64::INFINITY, Pair::P12, 0);
    for (seg, w) in path.nodes.windows(2).enumerate() {
        let (a, b) = (w[0].relative(), w[1].relative());
        for (k, pair) in Pair::ALL.into_iter().enumerate() {
            let d = segment_min_distance(a[k], b[k]);
            if d < best.0 {
                best = (d, pair, seg);
            }
        }
    }
    best
}

/// `∫₀¹ du / √((a + b u)² + (c + d u)²)`.
///
/// Fails with [`Error::DegenerateSegment`] when `(b, d)` vanishes (the caller
/// should then use `1/√(a² + c²)`), and with [`Error::SegmentCollision`] when
/// the segment passes within [`COLLISION_DISTANCE`] of the origin.
pub fn segment_log_integral(a: f64, b: f64, c: f64, d: f64) -> Result<f64> {
    let p = [a, c, 0.0];
    let e = [a + b, c + d, 0.0];
    Segment::new(p, e).ok_or(Error::DegenerateSegment)?.integral(p, e)
}

/// `∫₀¹ du / |p + u(e − p)|` including the constant case.
pub(crate) fn unit_integral(p: V3, e: V3) -> Result<f64> {
    match Segment::new(p, e) {
        Some(seg) => seg.integral(p, e),
        None => {
            let r = norm(scale(0.5, [p[0] + e[0], p[1] + e[1], p[2] + e[2]]));
            check_distance(r)?;
            Ok(1.0 / r)
        }
    }
}

/// Value of `∫₀¹ du/|r(u)|` and its gradients with respect to both endpoints.
///
/// The gradient uses `J = ∫ r/|r|³ du = 2b / (|b|² |p| |e|)` with
/// `b = p/|p| + e/|e|`, together with the moment identities along the
/// segment direction. Very short segments switch to a two-term expansion.
pub(crate) fn unit_integral_grad(p: V3, e: V3) -> Result<(f64, V3, V3)> {
    let d = sub(e, p);
    let l2 = dot(d, d);
    let np = norm(p);
    let ne = norm(e);
    let len = l2.sqrt();
    if len < 1e-6 * np.min(ne) {
        check_distance(np.min(ne))?;
        let value = unit_integral(p, e)?;
        let np3 = np * np * np;
        let m0 = scale(1.0 / np3, p);
        let m1 = axpy(-3.0 * dot(p, d) / (np3 * np * np), p, scale(1.0 / np3, d));
        let gp = scale(-1.0, axpy(1.0 / 6.0, m1, scale(0.5, m0)));
        let ge = scale(-1.0, axpy(1.0 / 3.0, m1, scale(0.5, m0)));
        return Ok((value, gp, ge));
    }
    let seg = Segment::new(p, e).ok_or(Error::DegenerateSegment)?;
    let value = seg.integral(p, e)?;
    let b = axpy(1.0 / np, p, scale(1.0 / ne, e));
    let j = scale(2.0 / (dot(b, b) * np * ne), b);
    let dh = scale(1.0 / len, d);
    let sp = seg.sp;
    let jd = dot(j, dh);
    let m = axpy(-sp, dh, p);
    // g_e = [(p·J − I) d̂ + s_p (J − J_d d̂) − J_d m] / L
    let mut ge = scale(dot(p, j) - value, dh);
    ge = axpy(sp, axpy(-jd, dh, j), ge);
    ge = axpy(-jd, m, ge);
    ge = scale(1.0 / len, ge);
    let gp = [-j[0] - ge[0], -j[1] - ge[1], -j[2] - ge[2]];
    Ok((value, gp, ge))
}

/// `dt · ∫₀¹ du / |p_start + u (p_end − p_start)|`.
pub fn pair_segment_potential(p_start: PlanarVec, p_end: PlanarVec, dt: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::ConstraintViolation(format!("dt must be positive, got {dt}")));
    }
    Ok(dt * unit_integral(lift(p_start, 0.0), lift(p_end, 0.0))?)
}

/// `∫ K dt = Σ_j (|Δq1|² + |Δq2|²) / dt`, i.e. `n Σ |Δq|²` on the unit interval.
pub fn path_kinetic(path: &DiscretePath) -> f64 {
    let dt = path.dt();
    path.nodes
        .windows(2)
        .map(|w| ((w[1].q1 - w[0].q1).norm_sq() + (w[1].q2 - w[0].q2).norm_sq()) / dt)
        .sum()
}

/// Exact action of the piecewise-linear path, split into the four binary actions.
pub fn path_action(path: &DiscretePath) -> Result<ActionBreakdown> {
    let dt = path.dt();
    let mut pot = [0.0; 4];
    let mut kin = [0.0; 4];
    for (seg, w) in path.nodes.windows(2).enumerate() {
        let (a, b) = (w[0].relative(), w[1].relative());
        let d1 = (w[1].q1 - w[0].q1).norm_sq();
        let d2 = (w[1].q2 - w[0].q2).norm_sq();
        kin[0] += 0.25 * (b[0] - a[0]).norm_sq() / dt;
        kin[1] += 0.25 * (b[1] - a[1]).norm_sq() / dt;
        kin[2] += 0.5 * d1 / dt;
        kin[3] += 0.5 * d2 / dt;
        for (k, pair) in Pair::ALL.into_iter().enumerate() {
            let weight = PAIR_COEFFS[k].2;
            let i = unit_integral(lift(a[k], 0.0), lift(b[k], 0.0))
                .map_err(|_| Error::PathCollision { pair, segment: seg })?;
            pot[k] += weight * dt * i;
        }
    }
    let parts: [f64; 4] = std::array::from_fn(|k| kin[k] + pot[k]);
    let kinetic = path_kinetic(path);
    let potential = pot.iter().sum();
    Ok(ActionBreakdown {
        total: parts.iter().sum(),
        a12: parts[0],
        a13: parts[1],
        a14: parts[2],
        a23: parts[3],
        kinetic,
        potential,
    })
}

/// Action of the node sequence with softening `eps`, and its gradient with
/// respect to every node, stored as `(∂/∂q1, ∂/∂q2)` per node.
pub fn action_and_node_gradient(
    path: &DiscretePath,
    eps: f64,
) -> Result<(f64, Vec<ReducedConfig>)> {
    let dt = path.dt();
    let nodes = &path.nodes;
    let mut grad = vec![ReducedConfig::default(); nodes.len()];
    let mut total = 0.0;
    for (seg, w) in nodes.windows(2).enumerate() {
        let v1 = w[1].q1 - w[0].q1;
        let v2 = w[1].q2 - w[0].q2;
        total += (v1.norm_sq() + v2.norm_sq()) / dt;
        let k1 = v1 * (2.0 / dt);
        let k2 = v2 * (2.0 / dt);
        grad[seg].q1 += -k1;
        grad[seg].q2 += -k2;
        grad[seg + 1].q1 += k1;
        grad[seg + 1].q2 += k2;

        let (a, b) = (w[0].relative(), w[1].relative());
        for (k, pair) in Pair::ALL.into_iter().enumerate() {
            let (c1, c2, weight) = PAIR_COEFFS[k];
            let (i, gp, ge) = unit_integral_grad(lift(a[k], eps), lift(b[k], eps))
                .map_err(|_| Error::PathCollision { pair, segment: seg })?;
            let f = weight * dt;
            total += f * i;
            let gp = PlanarVec::new(gp[0], gp[1]) * f;
            let ge = PlanarVec::new(ge[0], ge[1]) * f;
            grad[seg].q1 += gp * c1;
            grad[seg].q2 += gp * c2;
            grad[seg + 1].q1 += ge * c1;
            grad[seg + 1].q2 += ge * c2;
        }
    }
    Ok((total, grad))
}
