use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or a configuration that violates a module precondition.
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(String),
    /// A computation failed after its inputs were accepted.
    #[error("computation failed: {0}")]
    Module(#[from] bcsa::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Validation(_) => 2,
            CliError::Io(_) => 3,
            CliError::Module(_) => 4,
        })
    }
}

pub fn invalid<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Validation(msg.into()))
}

/// Module errors raised while checking inputs are validation failures.
pub fn rejected(e: bcsa::Error) -> CliError {
    CliError::Validation(e.to_string())
}
