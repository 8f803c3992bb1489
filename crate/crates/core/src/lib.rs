//! Upper Lyapunov exponents of rotation-perturbed 2D linear cocycles.
//!
//! A cocycle `A: X -> GL(2, R)` over an invertible base map `T` is perturbed
//! to `A_theta = A R_theta`. When `A` has a dominated splitting it is
//! conjugated by rotations to a lower-triangular cocycle `H`, and
//! `theta -> lambda^+(A_theta)` is evaluated near 0 through the strong
//! direction of `H R_theta`, together with its first two derivatives.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod base;
pub mod cocycle;
pub mod config;
pub mod domination;
pub mod error;
pub mod heisenberg;
pub mod mat2;
pub mod report;
pub mod selftest;
pub mod slope;
pub mod sum;
pub mod theta;
pub mod triangular;

pub use base::{BaseSystem, Direction, Point};
pub use cocycle::CocycleSpec;
pub use domination::{DominationCertificate, Verdict};
pub use error::{CocycleError, Result};
pub use mat2::{Mat2, Rotation};
pub use slope::{mobius_act, Slope};
pub use triangular::TriangularCocycle;
