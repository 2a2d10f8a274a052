use thiserror::Error;

/// Errors produced by the numerical routines.
///
/// Floating-point payloads are carried as `f64` regardless of the scalar
/// type the computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("inconsistent duality parameters: {0}")]
    Consistency(String),

    #[error("refusing {what}: {requested} exceeds the configured cap of {cap}")]
    CapExceeded {
        what: &'static str,
        requested: u128,
        cap: u128,
    },

    #[error("{what} did not converge: last two iterates {previous:e} and {last:e}")]
    NonConvergence {
        what: &'static str,
        previous: f64,
        last: f64,
    },

    #[error("initial data violates the Dirichlet boundary condition (max boundary residual {residual:e})")]
    BoundaryIncompatible { residual: f64 },

    #[error("invalid IFS document: {0}")]
    Document(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of an iterative procedure to settle, as opposed to
    /// bad inputs.
    pub fn is_non_convergence(&self) -> bool {
        matches!(self, Error::NonConvergence { .. })
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
