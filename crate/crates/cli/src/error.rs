use dcomp_core::CoreError;
use dcomp_design::DesignError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error(transparent)]
    Design(#[from] DesignError),

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

fn core_code(e: &CoreError) -> i32 {
    match e {
        CoreError::Integration(_) | CoreError::Numerical(_) | CoreError::BasinFailures { .. } => EXIT_NUMERICAL,
        _ => EXIT_VALIDATION,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_VALIDATION,
            CliError::Core(e) => core_code(e),
            CliError::Design(e) => match e {
                DesignError::Core(c) => core_code(c),
                DesignError::Degenerate(_) => EXIT_NUMERICAL,
                DesignError::Io(_) => EXIT_IO,
                _ => EXIT_VALIDATION,
            },
            CliError::Io(_) | CliError::Json(_) => EXIT_IO,
        }
    }
}
