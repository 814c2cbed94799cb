use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("corrupt artifact: {0}")]
    Corrupt(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("internal error: {0}")]
    Internal(String),

    /// Every unit of a batch job failed.
    #[error("total failure: {0}")]
    TotalFailure(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Process exit code for this error class when surfaced by the command line.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Config(_) | Error::InvalidState(_) | Error::Io(_) => 2,
            Error::Corrupt(_) => 3,
            Error::Diverged(_) => 4,
            Error::Internal(_) | Error::TotalFailure(_) => 5,
        }
    }
}
