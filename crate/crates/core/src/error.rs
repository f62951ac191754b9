use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, TfcwError>;

#[derive(Debug, Error)]
pub enum TfcwError {
    /// A parameter is outside its documented range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Input data violates a domain invariant (non-finite values, too few points, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("parse error: {0}")]
    Format(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl TfcwError {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        TfcwError::InvalidArgument(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        TfcwError::InvalidInput(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        TfcwError::Parse {
            line,
            msg: msg.into(),
        }
    }

    /// Wraps an I/O failure with the path it concerned.
    pub fn at_path(path: &std::path::Path) -> impl FnOnce(io::Error) -> TfcwError + '_ {
        move |e| TfcwError::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    }

    /// True for errors caused by bad data rather than bad usage.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            TfcwError::InvalidInput(_) | TfcwError::Parse { .. } | TfcwError::Format(_) | TfcwError::Io(_)
        )
    }
}
