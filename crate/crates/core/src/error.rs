use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("input is not valid UTF-8 at line {line}")]
    Utf8 { line: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A statistic that has no value for the given input (zero variance,
    /// empty edge set, too few nodes, ...).
    #[error("undefined: {0}")]
    Undefined(String),

    #[error("unknown node: {0}")]
    UnknownNode(String),

    #[error("duplicate node: {0}")]
    DuplicateNode(String),

    #[error("duplicate record id: {0}")]
    DuplicateId(String),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
