//! Invariant means on semigroups and Hölder continuous retractions onto the
//! common fixed-point set of uniformly Lipschitzian semigroup actions on
//! bounded closed convex subsets of `R^d`.
//!
//! The pipeline: pick an index semigroup and a (left) invariant mean on it
//! ([`semigroup`]), an action `{T_t}` of that semigroup on a convex body
//! ([`action`], [`geometry`]), then iterate the mean-averaged map
//! `x ↦ Σ_t μ_t T_t x` to its limit ([`retraction`]). When the uniform
//! Lipschitz constant `k` is below `√2`, the limit map is a Hölder continuous
//! retraction onto the common fixed points; [`analysis`] supplies the
//! exponent, the constant, and the empirical checks.

pub mod action;
pub mod analysis;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod retraction;
pub mod rng;
pub mod semigroup;
pub mod simplex;

pub use error::{Error, Result};
pub use exec::Exec;
pub use geometry::{ConvexBody, Matrix, Vector};
pub use semigroup::{FiniteSemigroup, IndexSet, InvariantMean, Mean};
