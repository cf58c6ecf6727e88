//! Zeroth-order optimization on embedded Riemannian manifolds.
//!
//! The crate estimates Riemannian gradients and Hessians from function values
//! alone, by Gaussian smoothing in the tangent space, and drives four solvers
//! with them: gradient descent, stochastic gradient descent (plus a projected
//! variant for geodesically convex problems), proximal gradient on the Stiefel
//! manifold and stochastic cubic-regularized Newton.
//!
//! Only `alloc` is required. File formats and the command-line harness live in
//! the companion `manifold-zo` crate.

#![no_std]

extern crate alloc;

pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod manifold;
pub mod oracle;
pub mod problems;
pub mod rng;
pub mod solvers;
pub mod subproblem;
pub mod theory;

pub use error::{Error, Result};
pub use linalg::Mat;
pub use manifold::{Chart, Manifold, ManifoldKind, Retraction, SpdMetric, TOL_FEAS};
