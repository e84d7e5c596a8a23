use thiserror::Error;

use crate::corpus::TokenId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("text is empty after tokenization")]
    EmptyText,

    #[error("query is empty after tokenization")]
    EmptyQuery,

    #[error("bounds ({i}, {j}) out of range for text of length {len}")]
    Bounds { i: usize, j: usize, len: usize },

    #[error("duplicate text id {0}")]
    DuplicateId(u32),

    #[error("frequency must be at least 1")]
    BadFrequency,

    #[error("weight must be positive and finite, got {0}")]
    BadWeight(f64),

    #[error("token {0} is not present in the corpus statistics")]
    UnknownToken(TokenId),

    #[error("{what} of size {size} exceeds the configured cap {cap}")]
    CapExceeded {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("invalid parameters: {0}")]
    BadParams(String),

    #[error("corrupt index: {0}")]
    CorruptIndex(String),

    #[error("unsupported index format version {0}")]
    UnsupportedVersion(u16),

    #[error("malformed corpus record on line {line}: {reason}")]
    BadRecord { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
