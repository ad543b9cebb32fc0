use thiserror::Error;

/// Errors raised across the certification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported scenario: {0}")]
    Unsupported(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("polytope is unbounded along ray {ray:?}")]
    Unbounded { ray: Vec<String> },
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("soundness violation: {0}")]
    Soundness(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
