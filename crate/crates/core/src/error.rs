use thiserror::Error;

use crate::model::{FunctionId, ValidationReport};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation was applied to a placement or episode in the wrong state.
    #[error("state error: {0}")]
    State(String),

    #[error("constraint violation: {action} is not permitted for function {function}")]
    ConstraintViolation {
        function: FunctionId,
        action: &'static str,
    },

    #[error("shape mismatch: expected length {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("numeric fault (non-finite value) during episode {episode}")]
    NumericFault { episode: usize },

    #[error("no feasible action in the mask")]
    NoFeasibleAction,

    #[error("infeasible workload configuration: {0}")]
    Generation(String),

    #[error("bucket has {got} functions, the exhaustive search limit is {limit}")]
    TooLarge { limit: usize, got: usize },

    #[error("invalid bucket: {0}")]
    InvalidBucket(ValidationReport),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
