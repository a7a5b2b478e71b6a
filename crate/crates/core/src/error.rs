use thiserror::Error;

/// Errors raised by the simulation and analysis layers.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("graph size overflow: {0}")]
    SizeOverflow(String),

    #[error("network validation failed: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("empty node subset")]
    EmptySubset,

    #[error("unknown model variant `{0}`")]
    UnknownVariant(String),

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("integration failed: {0}")]
    Integration(#[from] crate::solver::SolverError),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{failed} of {total} basin cells failed to integrate")]
    BasinFailures { failed: usize, total: usize },
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
