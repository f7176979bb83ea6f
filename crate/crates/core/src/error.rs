//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by the training engine and proof construction.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid architecture: {0}")]
    InvalidArch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("'{0}' is not on the accepted list")]
    NotWhitelisted(String),
    #[error("index {index} out of range for dataset of {len} rows")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("malformed proof: {0}")]
    Structural(String),
    #[error(transparent)]
    Codec(#[from] crate::proof::CodecError),
    #[error(transparent)]
    Seal(#[from] crate::proof::SealError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
