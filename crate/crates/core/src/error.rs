use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the dynamics, learner and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("mass matrix is singular or ill-conditioned (condition estimate {condition:.3e})")]
    SingularMassMatrix { condition: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range for log of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("initial conditions differ between desired and actual signals ({0})")]
    MismatchedInitialConditions(&'static str),

    #[error("empty trace")]
    EmptyTrace,

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn config(line: usize, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Csv { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
