//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures reported by the library.
///
/// Parameter problems are separated from numerical failures so that callers
/// (in particular the command-line driver) can map them to distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violates a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two objects that must share a layout do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An iterative or factorization step did not reach its tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Reading or writing a file failed.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A JSON document could not be parsed or produced.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the error stems from user input rather than from the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_) | Error::DimensionMismatch(_) | Error::Json(_)
        )
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
