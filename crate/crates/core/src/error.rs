use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("code width {0} is outside the supported range 1..=128")]
    UnsupportedWidth(usize),

    #[error("width mismatch: expected {expected} bits, found {found}")]
    WidthMismatch { expected: usize, found: usize },

    #[error("bits set above code width {width}")]
    NonCanonicalBits { width: usize },

    #[error("bit position {position} out of range 1..={width}")]
    BitOutOfRange { position: usize, width: usize },

    #[error("substring start={start} len={len} does not fit in a {width}-bit code")]
    SliceOutOfRange { start: usize, len: usize, width: usize },

    #[error("weight {index} is negative")]
    NegativeWeight { index: usize },

    #[error("weight {index} is not finite")]
    NonFiniteWeight { index: usize },

    #[error("a single hash table indexes at most 32 bits, got {0}; split the code with a multi-index")]
    TableTooWide(usize),

    #[error("table count {tables} invalid for {width}-bit codes")]
    InvalidTableCount { tables: usize, width: usize },

    #[error("k must be at least 1")]
    InvalidK,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed input at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn format(offset: u64, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }
}
