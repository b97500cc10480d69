use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid length: expected {expected} bits, got {actual}")]
    InvalidLength { expected: usize, actual: usize },

    /// A chain walk asked for masks beyond the end of the bitmask vector.
    #[error("mask range: levels {first}..={last} requested, only {available} masks available")]
    MaskRange {
        first: usize,
        last: usize,
        available: usize,
    },

    #[error("one-time key has already been used to sign")]
    KeyAlreadyUsed,

    #[error("malformed encoding at byte {offset}: {reason}")]
    MalformedEncoding { offset: usize, reason: String },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("domain of 2^{bits} inputs is too large for exhaustive search (max 2^{max})")]
    DomainTooLarge { bits: usize, max: usize },

    #[error("index out of range: {0}")]
    IndexRange(String),

    /// A value claimed by the reduction as a preimage or second preimage
    /// failed re-verification under `f_k`.
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
}
