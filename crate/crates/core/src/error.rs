use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the restoration pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its domain (even patch size, order 3, p = 0, ...).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A caller broke an operation's precondition (coordinate out of bounds, asymmetric matrix, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The weighted least-squares system carries no information (all weights zero).
    #[error("degenerate system: {0}")]
    Degenerate(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("unsupported format: {0}")]
    Unsupported(String),

    #[error("frame {index}: {message}")]
    Sequence { index: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Contract(msg.into()))
}
