use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("modulus mismatch: expected {expected}, found {found}")]
    ModulusMismatch { expected: u64, found: u64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("level exhausted: operation needs level {needed}, handle has {available}")]
    LevelExhausted { needed: usize, available: usize },

    #[error("depth exhausted while evaluating {step}: needs level {needed}, handle has {available}")]
    DepthExhausted { step: String, needed: usize, available: usize },

    #[error("plaintext modulus tag mismatch: {left} vs {right}")]
    TagMismatch { left: u64, right: u64 },

    #[error("handles belong to different evaluators")]
    BackendMismatch,

    #[error("slot {slot} holds {value}, which is not divisible by {p}")]
    NotDivisible { slot: usize, value: u64, p: u64 },

    #[error("cannot pack an empty vector")]
    EmptyPacking,

    #[error("{count} slots exceed the configured maximum of {max}")]
    TooManySlots { count: usize, max: usize },

    #[error("value {value} does not fit modulus {modulus}")]
    OutOfRange { value: i64, modulus: u64 },

    #[error("linear system is inconsistent: {0}")]
    Inconsistent(String),

    #[error("polynomial is neither odd nor even")]
    MixedParity,

    #[error("incomplete truth table: expected {expected} entries, found {found}")]
    IncompleteTable { expected: usize, found: usize },

    #[error("decryption invalid: noise exceeds the ciphertext modulus budget")]
    DecryptionInvalid,

    #[error("{0} is not invertible modulo the ciphertext modulus")]
    NotInvertible(String),

    #[error("unsupported by this backend: {0}")]
    Unsupported(String),

    #[error("row {row}: {msg}")]
    Data { row: usize, msg: String },

    #[error("parameter selection infeasible: {0}")]
    Infeasible(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
