//! Crate-wide error type with stable machine-readable tags.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{format} parse error at {location}: {message}")]
    Parse {
        format: &'static str,
        location: String,
        message: String,
    },

    #[error("dataset not found: {}", .0.display())]
    DatasetNotFound(PathBuf),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable tag for machine-parsable error lines, one per variant.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::InvalidSymbol(_) => "invalid-symbol",
            Error::InvalidInput(_) => "invalid-input",
            Error::InvalidTopology(_) => "invalid-topology",
            Error::InvalidConfig(_) => "invalid-config",
            Error::Parse { .. } => "parse-error",
            Error::DatasetNotFound(_) => "dataset-not-found",
            Error::Io(_) => "io-error",
        }
    }

    pub(crate) fn parse(format: &'static str, location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            format,
            location: location.into(),
            message: message.into(),
        }
    }
}
