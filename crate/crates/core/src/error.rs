use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A caller broke a documented precondition (shape mismatch, bad parameter).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A point failed the feasibility check of its manifold.
    #[error("infeasible point: residual {residual:.3e} exceeds tolerance {tol:.1e}")]
    Infeasible { residual: f64, tol: f64 },

    /// Logarithm requested at a cut point (antipodal sphere points).
    #[error("logarithm undefined: {0}")]
    Singular(String),

    /// The requested operation is not available on this manifold.
    #[error("unsupported on {manifold}: {what}")]
    Unsupported { manifold: &'static str, what: &'static str },

    /// A numerical routine failed (non-finite values, failed factorization).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
