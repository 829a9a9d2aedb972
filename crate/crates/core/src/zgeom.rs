//! Pair coordinates `Z1 = q1 − q2`, `Z2 = q1 + q2` and the quadrant reflection.
//!
//! At fixed `|Z1|, |Z2|` the potential depends only on the angle `Δ ∈ [0, π/2]`
//! between the lines spanned by `Z1` and `Z2`, and decreases in it. Reflecting
//! `Z1` into the closed second quadrant and `Z2` into the closed third keeps
//! both radii and can only widen `Δ`, so it never raises the potential.

use serde::{Deserialize, Serialize};

use crate::action::{path_action, DiscretePath};
use crate::error::{Error, Result};
use crate::geometry::{PlanarVec, ReducedConfig};
use crate::minimizer::{minimize, Family, Problem, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZState {
    pub z1: PlanarVec,
    pub z2: PlanarVec,
}

pub fn to_z(c: &ReducedConfig) -> ZState {
    ZState {
        z1: c.q1 - c.q2,
        z2: c.q1 + c.q2,
    }
}

pub fn from_z(z: &ZState) -> ReducedConfig {
    ReducedConfig::new((z.z1 + z.z2) * 0.5, (z.z2 - z.z1) * 0.5)
}

/// Angle between the lines through `Z1` and `Z2`, in `[0, π/2]`.
pub fn delta(z: &ZState) -> Result<f64> {
    if z.z1.norm_sq() == 0.0 || z.z2.norm_sq() == 0.0 {
        return Err(Error::UndefinedAngle);
    }
    Ok(z.z1.cross(z.z2).abs().atan2(z.z1.dot(z.z2).abs()))
}

fn check_radii(r1: f64, r2: f64, delta: f64) -> Result<()> {
    if !(r1 > 0.0 && r2 > 0.0) {
        return Err(Error::Domain(format!("radii must be positive, got {r1}, {r2}")));
    }
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&delta) {
        return Err(Error::Domain(format!("delta={delta} outside [0, pi/2]")));
    }
    Ok(())
}

/// `|Z1 + Z2|²` and `|Z1 − Z2|²` in terms of the radii and `Δ`.
fn mixed_sq(r1: f64, r2: f64, delta: f64) -> (f64, f64) {
    let s = (0.5 * delta).sin();
    let plus = (r1 + r2).powi(2) - 4.0 * r1 * r2 * s * s;
    let minus = (r1 - r2).powi(2) + 4.0 * r1 * r2 * s * s;
    (plus, minus)
}

/// `U = 2/r1 + 2/r2 + 1/√(r1² + r2² + 2 r1 r2 cos Δ) + 1/√(r1² + r2² − 2 r1 r2 cos Δ)`.
pub fn potential_z(r1: f64, r2: f64, delta: f64) -> Result<f64> {
    check_radii(r1, r2, delta)?;
    let (plus, minus) = mixed_sq(r1, r2, delta);
    if minus == 0.0 || plus == 0.0 {
        return Err(Error::ConfigCollision);
    }
    Ok(2.0 / r1 + 2.0 / r2 + 1.0 / plus.sqrt() + 1.0 / minus.sqrt())
}

pub fn du_ddelta(r1: f64, r2: f64, delta: f64) -> Result<f64> {
    check_radii(r1, r2, delta)?;
    let (plus, minus) = mixed_sq(r1, r2, delta);
    if minus == 0.0 || plus == 0.0 {
        return Err(Error::ConfigCollision);
    }
    // r1 r2 sinΔ (plus^{-3/2} − minus^{-3/2}), with the difference of powers
    // factored through minus − plus = 4 r1 r2 cosΔ so the sign is exact.
    let (sp, sm) = (plus.sqrt(), minus.sqrt());
    let (sin, cos) = delta.sin_cos();
    let num = 4.0 * r1 * r2 * cos * (plus + sp * sm + minus);
    Ok(-r1 * r2 * sin * num / ((sp + sm) * plus * sp * minus * sm))
}

/// `Z̃1 = (−|Z1x|, |Z1y|)`, `Z̃2 = (−|Z2x|, −|Z2y|)`.
pub fn reflect_z(z: &ZState) -> ZState {
    ZState {
        z1: PlanarVec::new(-z.z1.x.abs(), z.z1.y.abs()),
        z2: PlanarVec::new(-z.z2.x.abs(), -z.z2.y.abs()),
    }
}

pub fn reflect_config(c: &ReducedConfig) -> ReducedConfig {
    from_z(&reflect_z(&to_z(c)))
}

pub fn reflect_path_z(path: &DiscretePath) -> DiscretePath {
    path.map_nodes(reflect_config)
}

/// `(Δ, Δ̃)` for a state and its reflection.
pub fn delta_tilde_geq(z: &ZState) -> Result<(f64, f64)> {
    let d = delta(z)?;
    let dt = delta(&reflect_z(z))?;
    debug_assert!(dt >= d - 1e-12, "reflected angle {dt} below {d}");
    Ok((d, dt))
}

/// Closed quadrants `1..=4` containing `v`.
fn quadrants(v: PlanarVec) -> [bool; 4] {
    [
        v.x >= 0.0 && v.y >= 0.0,
        v.x <= 0.0 && v.y >= 0.0,
        v.x <= 0.0 && v.y <= 0.0,
        v.x >= 0.0 && v.y <= 0.0,
    ]
}

/// Whether `Z1` and `Z2` lie in two adjacent closed quadrants, the equality
/// case of the reflection inequality.
pub fn adjacent_closed_quadrants(z: &ZState) -> bool {
    let a = quadrants(z.z1);
    let b = quadrants(z.z2);
    (0..4).any(|i| a[i] && (b[(i + 1) % 4] || b[(i + 3) % 4]))
}

/// `Z1 ∈ Q̄2` and `Z2 ∈ Q̄3` at every node, with slack `tol`.
pub fn quadrant_confinement(path: &DiscretePath, tol: f64) -> bool {
    path.nodes.iter().all(|c| {
        let z = to_z(c);
        z.z1.x <= tol && z.z1.y >= -tol && z.z2.x <= tol && z.z2.y <= tol
    })
}

#[derive(Debug, Clone)]
pub struct FamilyComparison {
    pub a_prograde: f64,
    pub a_retrograde: f64,
    pub gap: f64,
    /// Action of the reflected prograde minimizer, feasible for the retrograde family.
    pub reflected_prograde: f64,
    pub retrograde_confined: bool,
    pub prograde: Solution,
    pub retrograde: Solution,
}

/// Minimizes over both families concurrently.
pub fn compare_families(theta: f64, n: usize) -> Result<FamilyComparison> {
    let pro = Problem::new(theta, n, Family::Prograde)?;
    let retro = Problem::new(theta, n, Family::Retrograde)?;
    compare_problems(&pro, &retro)
}

pub fn compare_problems(pro: &Problem, retro: &Problem) -> Result<FamilyComparison> {
    let (p, r) = rayon::join(|| minimize(pro), || minimize(retro));
    let (prograde, retrograde) = (p?, r?);
    let reflected_prograde = path_action(&reflect_path_z(&prograde.path))?.total;
    Ok(FamilyComparison {
        a_prograde: prograde.action.total,
        a_retrograde: retrograde.action.total,
        gap: prograde.action.total - retrograde.action.total,
        reflected_prograde,
        retrograde_confined: quadrant_confinement(&retrograde.path, 1e-6),
        prograde,
        retrograde,
    })
}
