use alloc::string::String;
use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A file-format error tied to a 1-based line number.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    /// A domain-level violation (bad span, missing label, empty input, ...).
    #[error("{0}")]
    Validation(String),
}

impl Error {
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Error::Validation(message.into())
    }
}

pub type Result<T> = core::result::Result<T, Error>;
