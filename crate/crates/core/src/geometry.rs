//! Planar vectors, the rotation convention, symmetric configurations and the
//! boundary sets of the variational problem.
//!
//! Rotations act on row vectors by right multiplication,
//! `v · R(θ)` with `R(θ) = [[cos θ, sin θ], [-sin θ, cos θ]]`, so that
//! `(x, y) ↦ (x cos θ − y sin θ, x sin θ + y cos θ)`: a counterclockwise turn.
//! Units are fixed: G = 1 and every mass equals 1.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarVec {
    pub x: f64,
    pub y: f64,
}

impl PlanarVec {
    pub const ZERO: PlanarVec = PlanarVec { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Right multiplication by `B = diag(1, -1)`.
    pub fn reflect_x(self) -> Self {
        Self::new(self.x, -self.y)
    }

    pub fn rotate(self, theta: f64) -> Self {
        rotate(self, theta)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for PlanarVec {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for PlanarVec {
    fn add_assign(&mut self, o: Self) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for PlanarVec {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for PlanarVec {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl Mul<f64> for PlanarVec {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl Mul<PlanarVec> for f64 {
    type Output = PlanarVec;
    fn mul(self, v: PlanarVec) -> PlanarVec {
        v * self
    }
}

/// Row-vector product `v · R(θ)`.
pub fn rotate(v: PlanarVec, theta: f64) -> PlanarVec {
    let (s, c) = theta.sin_cos();
    PlanarVec::new(v.x * c - v.y * s, v.x * s + v.y * c)
}

/// Positions of bodies 1 and 2; bodies 3 and 4 sit at `-q2` and `-q1`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReducedConfig {
    pub q1: PlanarVec,
    pub q2: PlanarVec,
}

impl ReducedConfig {
    pub const fn new(q1: PlanarVec, q2: PlanarVec) -> Self {
        Self { q1, q2 }
    }

    /// Full configuration `(q1, q2, -q2, -q1)`.
    pub fn full(&self) -> [PlanarVec; 4] {
        [self.q1, self.q2, -self.q2, -self.q1]
    }

    pub fn rotate(&self, theta: f64) -> Self {
        Self::new(rotate(self.q1, theta), rotate(self.q2, theta))
    }

    pub fn reflect_x(&self) -> Self {
        Self::new(self.q1.reflect_x(), self.q2.reflect_x())
    }

    /// Relabels 1↔2 and 3↔4, which in reduced form swaps `q1` and `q2`.
    pub fn swap(&self) -> Self {
        Self::new(self.q2, self.q1)
    }

    /// Relative vectors of the four binary pairs, in [`crate::Pair::ALL`] order.
    pub fn relative(&self) -> [PlanarVec; 4] {
        [
            self.q1 - self.q2,
            self.q1 + self.q2,
            self.q1 * 2.0,
            self.q2 * 2.0,
        ]
    }

    /// Force function `U = Σ 1/|qi − qj|` of the full four-body configuration.
    pub fn potential(&self) -> Result<f64> {
        let [z1, z2, d14, d23] = self.relative();
        let (r1, r2, r14, r23) = (z1.norm(), z2.norm(), d14.norm(), d23.norm());
        if r1 == 0.0 || r2 == 0.0 || r14 == 0.0 || r23 == 0.0 {
            return Err(Error::ConfigCollision);
        }
        Ok(2.0 / r1 + 2.0 / r2 + 1.0 / r14 + 1.0 / r23)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [
            self.q1.x - other.q1.x,
            self.q1.y - other.q1.y,
            self.q2.x - other.q2.x,
            self.q2.y - other.q2.y,
        ]
        .iter()
        .fold(0.0_f64, |m, d| m.max(d.abs()))
    }
}

/// Parameters `(a1, a2)` of a collinear start configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartParams {
    pub a1: f64,
    pub a2: f64,
}

impl StartParams {
    pub fn new(a1: f64, a2: f64) -> Result<Self> {
        let p = Self { a1, a2 };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.a1 >= 0.0 && self.a2 >= 0.0) {
            return Err(Error::ConstraintViolation(format!(
                "start parameters must be nonnegative, got a1={}, a2={}",
                self.a1, self.a2
            )));
        }
        Ok(())
    }
}

/// Parameters `(b1, b2, θ)` of a rotated rectangular end configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndParams {
    pub b1: f64,
    pub b2: f64,
    pub theta: f64,
}

impl EndParams {
    pub fn new(b1: f64, b2: f64, theta: f64) -> Self {
        Self { b1, b2, theta }
    }

    pub fn is_prograde(&self) -> bool {
        self.b1 >= 0.0 && self.b2 >= 0.0
    }
}

/// `q1 = (-a1 - a2, 0)`, `q2 = (-a1, 0)`.
pub fn start_config(p: StartParams) -> Result<ReducedConfig> {
    p.validate()?;
    Ok(ReducedConfig::new(
        PlanarVec::new(-p.a1 - p.a2, 0.0),
        PlanarVec::new(-p.a1, 0.0),
    ))
}

/// `q1 = (-b1, -b2)·R(θ)`, `q2 = (-b1, b2)·R(θ)`.
pub fn end_config(p: EndParams) -> ReducedConfig {
    ReducedConfig::new(
        rotate(PlanarVec::new(-p.b1, -p.b2), p.theta),
        rotate(PlanarVec::new(-p.b1, p.b2), p.theta),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundarySet {
    /// Collinear start set `V0`.
    Start,
    /// Prograde end set `V1(θ)`: `b1, b2 >= 0`.
    Prograde(f64),
    /// Retrograde end set `Ṽ1(θ)`: signs of `b1, b2` free.
    Retrograde(f64),
}

impl BoundarySet {
    pub fn name(&self) -> &'static str {
        match self {
            BoundarySet::Start => "V0",
            BoundarySet::Prograde(_) => "V1(theta)",
            BoundarySet::Retrograde(_) => "V1~(theta)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryParams {
    Start(StartParams),
    End(EndParams),
}

/// Tests whether `config` lies in `set` up to a componentwise absolute
/// tolerance and recovers its parameters.
pub fn membership(config: &ReducedConfig, set: BoundarySet, tol: f64) -> Option<BoundaryParams> {
    match set {
        BoundarySet::Start => {
            let a1 = -config.q2.x;
            let a2 = config.q2.x - config.q1.x;
            if a1 < -tol || a2 < -tol {
                return None;
            }
            let p = StartParams {
                a1: a1.max(0.0),
                a2: a2.max(0.0),
            };
            let rebuilt = start_config(p).ok()?;
            (rebuilt.max_abs_diff(config) <= tol).then_some(BoundaryParams::Start(p))
        }
        BoundarySet::Prograde(theta) | BoundarySet::Retrograde(theta) => {
            let u1 = rotate(config.q1, -theta);
            let u2 = rotate(config.q2, -theta);
            let b1 = -0.5 * (u1.x + u2.x);
            let b2 = 0.5 * (u2.y - u1.y);
            if matches!(set, BoundarySet::Prograde(_)) && (b1 < -tol || b2 < -tol) {
                return None;
            }
            let p = EndParams::new(b1, b2, theta);
            (end_config(p).max_abs_diff(config) <= tol).then_some(BoundaryParams::End(p))
        }
    }
}
