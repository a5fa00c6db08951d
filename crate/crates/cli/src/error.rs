use std::path::{Path, PathBuf};

use thiserror::Error;

/// Failures surfaced to the command line, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed configuration or data; exit code 2.
    #[error("{0}")]
    Input(String),
    /// The estimator failed on valid input; exit code 3.
    #[error("{0}")]
    Numeric(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io { .. } => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<locsparse::Error> for CliError {
    fn from(e: locsparse::Error) -> Self {
        match e {
            locsparse::Error::Singular(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
