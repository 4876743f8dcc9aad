use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or parameter values.
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] narrowlab_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("report error: {0}")]
    Report(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) | CliError::Core(narrowlab_core::Error::Domain(_)) => ExitCode::from(2),
            _ => ExitCode::from(1),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Report(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Report(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
