use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid dimension: expected {expected}, got {got}")]
    InvalidDimension { expected: usize, got: usize },

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("missing hyperparameter: {0} is required by {1}")]
    MissingHyperparameter(&'static str, String),

    #[error("quadrature did not converge: estimated error {error:e} against target {target:e} after {intervals} subintervals")]
    NonConvergence {
        error: f64,
        target: f64,
        intervals: usize,
    },

    /// A computed quantity fell outside a bound that must hold.
    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
