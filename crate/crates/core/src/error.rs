use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the evaluation pipeline.
///
/// Everything except [`Error::Internal`] is attributed to the caller's input
/// (unreadable files included); the CLI maps those to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("{path}: line {line}: duplicate id `{id}`")]
    DuplicateId { path: String, line: u64, id: String },

    #[error("{0}: empty file")]
    EmptyFile(String),

    #[error("{path}: line {line}: missing value in column `{column}`")]
    MissingValue {
        path: String,
        line: u64,
        column: String,
    },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("column `{column}`: value `{value}` for entity `{id}` is not numeric")]
    NonNumeric {
        column: String,
        id: String,
        value: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("entity mismatch: {0}")]
    IdMismatch(String),

    #[error("covariance matrix is not symmetric (max deviation {0:e})")]
    Asymmetric(f64),

    #[error("every entity was clipped; ALP is undefined")]
    AllClipped,

    #[error("internal error: {0}")]
    Internal(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the error stems from user-supplied input rather than a bug.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Internal(_))
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
