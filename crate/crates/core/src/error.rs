use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} line {line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("image error on {path}: {msg}")]
    Image { path: PathBuf, msg: String },

    #[error("numerical failure at iteration {iteration}: {msg}")]
    Numerical { iteration: usize, msg: String },

    #[error("sensitivity undefined: reference has no hole pixels")]
    SensitivityUndefined,

    #[error("specificity undefined: reference has no background pixels")]
    SpecificityUndefined,

    #[error("training error: {0}")]
    Training(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Contract(msg.into()))
}
