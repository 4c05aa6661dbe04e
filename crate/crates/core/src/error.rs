use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = SaaError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SaaError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl SaaError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        SaaError::InvalidInput(msg.into())
    }

    pub(crate) fn shape(
        context: &'static str,
        expected: impl Into<String>,
        got: impl Into<String>,
    ) -> Self {
        SaaError::ShapeMismatch {
            context,
            expected: expected.into(),
            got: got.into(),
        }
    }
}
