//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by game construction, sampling, dynamics and solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes of two inputs do not agree (profile vs. matrix, set vs. point, ...).
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A parameter violates its documented range or structural requirement.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A cost gradient evaluated to NaN or infinity.
    #[error("agent {agent} produced a non-finite gradient at iteration {iteration}")]
    NonFiniteGradient { agent: usize, iteration: u64 },

    /// The expected-game operator is not strongly monotone, so no unique
    /// equilibrium (and none of the rate machinery) is available.
    #[error("expected game is not strongly monotone: smallest symmetric-part eigenvalue is {0}")]
    NotStronglyMonotone(f64),

    /// An operation that needs closed-form structure was asked of a custom
    /// cost model.
    #[error("operation requires the quadratic cost family: {0}")]
    RequiresQuadratic(String),

    /// A custom cost model was used without declaring its bound constants.
    #[error("custom cost model declares no bounds; supply them explicitly")]
    MissingBounds,

    /// A statistical check was asked with too little data to be meaningful.
    #[error("{0}")]
    InsufficientData(String),

    /// A bound that is proven to hold was violated at runtime, which means
    /// the implementation (not the input) is wrong.
    #[error("internal invariant violated: {0}")]
    InvariantViolated(String),

    /// File-format problem when reading a persisted artifact.
    #[error("malformed file {path}: {reason}")]
    MalformedFile { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
