use thiserror::Error;

/// Errors raised while building, encoding, decoding or verifying schemes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),

    #[error("modulus {0} is outside the supported range (2, 2^32)")]
    UnsupportedModulus(u64),

    #[error("zero has no multiplicative inverse")]
    InversionOfZero,

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("operands live in different fields ({0} vs {1})")]
    FieldMismatch(u64, u64),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("N={n} does not divide K={k}; use the general assignment")]
    UseGeneralAssignment { k: usize, n: usize },

    #[error("grouped construction does not support {0}")]
    UnsupportedGroupedParams(String),

    #[error("grouped coefficient propagation failed at worker {worker}: {reason}")]
    GroupedSolveFailed { worker: usize, reason: String },

    #[error("message length L={l} is not divisible by the split count {m}")]
    BadMessageLength { l: usize, m: usize },

    #[error("expected answers from {expected} distinct workers, got {got}")]
    WrongResponderCount { expected: usize, got: usize },

    #[error("demand matrix has rank {rank} < {rows} rows")]
    RankDeficientDemand { rank: usize, rows: usize },

    #[error("{0}")]
    Unsupported(String),

    #[error("closed forms only cover N_r in {{1, 2, N}}, got N_r={nr}")]
    NotCovered { nr: usize },

    #[error("{count} responder subsets exceed the exhaustive cap {cap}")]
    SubsetCapExceeded { count: u128, cap: u128 },

    #[error("malformed document: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
