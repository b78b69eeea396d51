use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("failed to load {path}: {reason}")]
    Load { path: PathBuf, reason: String },

    #[error("failed to parse: {0}")]
    Parse(String),

    /// The input does not have the shape the operation expects
    /// (wrong number of rounds, unknown team ids, ...).
    #[error("structural error: {0}")]
    Structural(String),

    /// A precondition of the operation is not met.
    #[error("contract violated: {0}")]
    Contract(String),

    #[error("{what} would need {required} entries, cap is {cap}")]
    CapExceeded {
        what: String,
        required: u128,
        cap: u128,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameters(msg.into())
}
