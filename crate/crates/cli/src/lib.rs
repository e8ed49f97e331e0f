//! Pipeline orchestration, the ablation harness, and analysis reports
//! for the comment generator.

pub mod ablate;
pub mod config;
pub mod report;
pub mod stages;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or inconsistent inputs; exit code 1.
    #[error("{0}")]
    Validation(String),
    /// Missing files or filesystem failures; exit code 2.
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl From<comgen_core::Error> for CliError {
    fn from(e: comgen_core::Error) -> Self {
        match e {
            comgen_core::Error::Io { .. } | comgen_core::Error::ModelFile(_) => {
                CliError::Io(e.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
