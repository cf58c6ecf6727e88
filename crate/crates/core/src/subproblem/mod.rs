//! Inner problems of the proximal and cubic-regularized solvers.

pub mod cubic;
pub mod prox;

pub use cubic::{cubic_model, solve_cubic, CubicOptions, CubicSolution, TOL_CUBIC};
pub use prox::{prox_objective, solve_prox_tangent, ProxOptions, ProxSolution, TOL_KKT};
