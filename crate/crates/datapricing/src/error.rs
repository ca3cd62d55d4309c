use crate::config::ConfigError;

/// Failure of a CLI run, mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("solver error: {0}")]
    Solver(#[from] datapricing_core::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

pub mod exit {
    pub const OK: i32 = 0;
    pub const VALIDATION: i32 = 1;
    pub const SOLVER: i32 = 2;
    pub const USAGE: i32 = 64;
    pub const NO_INPUT: i32 = 66;
    pub const CANT_CREATE: i32 = 73;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Config(_) => exit::NO_INPUT,
            CliError::Validation(_) => exit::VALIDATION,
            CliError::Solver(_) => exit::SOLVER,
            CliError::Io(_) => exit::CANT_CREATE,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}
