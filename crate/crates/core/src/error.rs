use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input signal")]
    EmptyInput,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("LSP root search failed for frame {frame}: found {found} of 10 roots")]
    LspConversion { frame: usize, found: usize },

    #[error("LSP vector is not strictly increasing in (0, pi) at position {position}")]
    LspOrdering { position: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no training data")]
    EmptyTrainingData,

    #[error("insufficient training data: {have} vectors for a codebook of {need}")]
    InsufficientData { have: usize, need: usize },

    #[error("field `{field}` value {value} does not fit in {width} bits")]
    FieldOverflow {
        field: &'static str,
        value: u32,
        width: u32,
    },

    #[error("wrong packet length: expected {expected} bits, got {actual}")]
    PacketLength { expected: u32, actual: u32 },

    #[error("bad magic: expected {expected:?}")]
    BadMagic { expected: &'static str },

    #[error("unsupported {what} version {version}")]
    UnsupportedVersion { what: &'static str, version: u8 },

    #[error("CRC mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    CrcMismatch { stored: u32, computed: u32 },

    #[error("truncated {0}")]
    Truncated(&'static str),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// True for errors caused by malformed or inconsistent data rather than
    /// by the operating system.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}
