//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing required column(s): {0}")]
    MissingColumns(String),

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("format error at byte {offset}: {detail}")]
    Format { offset: usize, detail: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("class {class} has too few samples: {detail}")]
    ClassTooSmall { class: String, detail: String },

    #[error("network error: {0}")]
    Net(String),
}

/// Coarse category used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Model,
    Network,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Argument(_) => ErrorKind::Usage,
            Error::Io(_)
            | Error::Csv(_)
            | Error::MissingColumns(_)
            | Error::UnknownLabel(_)
            | Error::EmptyDataset
            | Error::ClassTooSmall { .. } => ErrorKind::Data,
            Error::Dimension { .. } | Error::Format { .. } | Error::NonFinite(_) => {
                ErrorKind::Model
            }
            Error::Net(_) => ErrorKind::Network,
        }
    }

    pub(crate) fn format_at(offset: usize, detail: impl Into<String>) -> Error {
        Error::Format {
            offset,
            detail: detail.into(),
        }
    }
}
