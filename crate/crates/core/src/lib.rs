//! Variational construction of double-double orbits in the equal-mass
//! parallelogram four-body problem.
//!
//! Paths are piecewise linear in time, their action is evaluated in closed
//! form, and minimizers are sought between a collinear start configuration and
//! a rotated rectangular end configuration.

// Negated float comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod action;
pub mod error;
pub mod extension;
pub mod geometry;
pub mod kepler;
pub mod minimizer;
pub mod optim;
pub mod tables;
pub mod testpath;
pub mod zgeom;

pub use action::{path_action, path_kinetic, ActionBreakdown, DiscretePath};
pub use error::{Error, Pair, Result};
pub use geometry::{
    end_config, membership, rotate, start_config, BoundaryParams, BoundarySet, EndParams,
    PlanarVec, ReducedConfig, StartParams,
};
