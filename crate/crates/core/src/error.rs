use thiserror::Error;

/// Errors raised by the optimization toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),

    #[error("invalid parameter space: {}", .0.join("; "))]
    InvalidSpace(Vec<String>),

    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("surrogate fit failed: {0}")]
    FitFailure(String),

    #[error("objective evaluation failed: {0}")]
    Evaluation(String),

    #[error("every archive row is imputed; no observed best point")]
    AllImputed,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
