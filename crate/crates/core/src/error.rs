use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::solver::{RunError, SolverError};

/// Failure of a driver, grouped by the process exit code it maps to.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration: {0}")]
    Config(String),
    #[error("validation failed:\n{0}")]
    Validation(String),
    #[error("solver: {0}")]
    Solver(#[from] Box<RunError>),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for configuration or validation problems, 3 for solver failures,
    /// 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Validation(_) | Error::Parse { .. } => 2,
            Error::Solver(e) => match e.error {
                SolverError::Validation(_) => 2,
                _ => 3,
            },
            Error::Io { .. } => 4,
        }
    }
}

impl From<RunError> for Error {
    fn from(e: RunError) -> Self {
        match e.error {
            SolverError::Validation(report) => Error::Validation(report.to_string()),
            _ => Error::Solver(Box::new(e)),
        }
    }
}

impl From<SolverError> for Error {
    fn from(e: SolverError) -> Self {
        RunError::from(e).into()
    }
}
