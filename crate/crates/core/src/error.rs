use thiserror::Error;

/// Errors raised by the simulation toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("expected {expected} bits, got {got}")]
    BitLength { expected: usize, got: usize },

    #[error("combination rank {rank} is out of range for C({k}, {m}) = {count}")]
    RankOutOfRange { rank: u128, k: usize, m: usize, count: u128 },

    #[error("invalid combination: {0}")]
    InvalidCombination(String),

    #[error("combination rank {rank} is outside the {bits}-bit codebook")]
    OutOfCodebook { rank: u128, bits: usize },

    #[error("invalid channel model: {0}")]
    InvalidChannel(String),

    #[error("timing offset of {offset} samples must be smaller than the hop length {hop_len}")]
    TimingOffset { offset: usize, hop_len: usize },

    #[error("channel estimate is zero, phase cannot be equalized")]
    ZeroChannel,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("lag grids differ between ambiguity profiles")]
    GridMismatch,

    #[error("scheme `{0}` is not supported here")]
    UnsupportedScheme(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam { name, reason: reason.into() }
}
