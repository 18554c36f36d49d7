use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: shape mismatch, expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        op: &'static str,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("{op}: length mismatch, expected {expected}, got {actual}")]
    LengthMismatch {
        op: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("secret image must be binary, found value {value} at index {index}")]
    NonBinarySecret { index: usize, value: f64 },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("attribute `{attribute}` missing from record {record}")]
    MissingAttribute { attribute: String, record: usize },

    #[error("attribute `{attribute}`: unknown value `{value}`")]
    UnknownValue { attribute: String, value: String },

    #[error("attribute `{attribute}`: cannot parse `{value}` as a number")]
    NotNumeric { attribute: String, value: String },

    #[error("payload of {dims} bits does not fit a {height}x{width} secret image; use a larger image or split the record over several images")]
    PayloadTooLarge {
        dims: usize,
        height: usize,
        width: usize,
    },

    #[error("payload of {bits} bits exceeds LSB capacity of {capacity} bits")]
    CapacityExceeded { bits: usize, capacity: usize },

    #[error("csv line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error("unsupported image format in {path}: {reason}")]
    UnsupportedImage { path: PathBuf, reason: String },

    #[error("png: {0}")]
    Png(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("schema file: {0}")]
    Schema(String),

    #[error("non-finite loss {value} at iteration {iteration}")]
    NonFiniteLoss { iteration: usize, value: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(op: &'static str, expected: &[usize], actual: &[usize]) -> Self {
        Error::ShapeMismatch {
            op,
            expected: expected.to_vec(),
            actual: actual.to_vec(),
        }
    }
}
