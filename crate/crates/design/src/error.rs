use thiserror::Error;

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("design matrix is rank deficient; dependent columns: {0:?}")]
    RankDeficient(Vec<String>),

    #[error("kernel matrix is not positive definite even with jitter {0:e}")]
    Degenerate(f64),

    #[error(transparent)]
    Core(#[from] dcomp_core::CoreError),

    #[error("log parse error: {0}")]
    Log(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = DesignError> = std::result::Result<T, E>;
