//! Error types shared across the pipeline.

use thiserror::Error;

/// Coarse error class, used by callers (the CLI) to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Caller misuse: bad arguments, invalid configuration, violated preconditions.
    Usage,
    /// Bad input data: unparseable files, malformed trees, broken records.
    Data,
    /// Bugs and numeric failures inside the library itself.
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("usage: {0}")]
    Usage(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("sentence {ordinal}: {msg}")]
    Structure { ordinal: usize, msg: String },

    #[error("record {id}: {msg}")]
    Dataset { id: String, msg: String },

    #[error("sequence needs {needed} tokens but the limit is {max_len}")]
    Capacity { needed: usize, max_len: usize },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Usage(_) => ErrorClass::Usage,
            Error::Parse { .. }
            | Error::Structure { .. }
            | Error::Dataset { .. }
            | Error::Capacity { .. }
            | Error::Io(_)
            | Error::Json(_) => ErrorClass::Data,
            Error::Internal(_) => ErrorClass::Internal,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
