//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Two objects that must live on the same ground space (or share a
    /// domain dimension) do not.
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    /// An argument is outside its admissible range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A construction-time invariant failed (weights not normalized,
    /// index set out of range, weights not summing to one, ...).
    #[error("construction: {0}")]
    Construction(String),

    /// A theorem- or operation-level precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The operation is not defined for this input class
    /// (e.g. derivatives of a nondifferentiable loss).
    #[error("not supported: {0}")]
    Capability(String),

    /// The solver exhausted its iteration budget.
    #[error(
        "solver did not converge after {iterations} iterations \
         (residual {residual:.3e}, tol {tolerance:.3e})"
    )]
    NonConvergence {
        iterations: usize,
        residual: f64,
        tolerance: f64,
        /// Downsampled residual history, oldest first.
        trace: Vec<f64>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
