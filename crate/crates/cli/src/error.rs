use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or missing input files, invalid configuration.
    #[error("{0}")]
    Input(holofit::Error),
    /// The optimization aborted.
    #[error("{0}")]
    Runtime(holofit::Error),
    #[error("{0}")]
    Usage(String),
}

impl From<holofit::Error> for CliError {
    fn from(e: holofit::Error) -> Self {
        match e {
            holofit::Error::Fit { .. } => CliError::Runtime(e),
            e => CliError::Input(e),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Input(_) | CliError::Usage(_) => ExitCode::from(2),
            CliError::Runtime(_) => ExitCode::from(3),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
