//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors reported by model construction, generators, recursions and the
/// Monte Carlo harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector or matrix did not have the expected dimension.
    #[error("{context}: expected dimension {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A parameter failed validation (sign, range or finiteness).
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A sample or intermediate value was NaN or infinite where a finite
    /// value is required.
    #[error("non-finite {what}")]
    NonFinite { what: &'static str },

    /// Every realization of an ensemble tripped the divergence guard, so
    /// there is nothing to average.
    #[error("all {n_realizations} realizations diverged")]
    AllRealizationsDiverged { n_realizations: usize },

    /// The requested initial distance cannot be reached by scaling the
    /// base initial vector (negative discriminant).
    #[error("distance {distance} is below the minimum achievable {minimum}")]
    UnreachableDistance { distance: f64, minimum: f64 },

    /// A Cholesky factorization failed; the matrix is not positive
    /// definite.
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
