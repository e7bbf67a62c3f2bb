use thiserror::Error;

/// Errors raised by the library. Every variant is a rejected input; nothing
/// here is recoverable by retrying.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("gcd(0, 0) is undefined")]
    GcdOfZeros,

    #[error("empty interval: hi ({hi}) < lo ({lo})")]
    EmptyInterval { lo: u64, hi: u64 },

    #[error("lower bound must be at least 1, got {0}")]
    ZeroLowerBound(u64),

    #[error("{value} exceeds the supported maximum 2^62")]
    TooLarge { value: u64 },

    #[error("k must be at least 2, got {0}")]
    KTooSmall(u32),

    #[error("{field}: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("gcd(r, q) = {gcd} is not {k}-free; the arithmetic-progression density formula does not apply")]
    NotKFreeGcd { gcd: u64, k: u32 },

    #[error("variance needs N <= pair cap {cap}, got N = {n}")]
    PairCapExceeded { n: u64, cap: u64 },

    #[error("full path enumeration supports N <= {max}, got N = {n}")]
    OracleTooLarge { n: u64, max: u64 },

    #[error("grid needs at least {min} points, got {got}")]
    GridTooShort { min: usize, got: usize },

    #[error("grid must be strictly increasing")]
    GridNotIncreasing,

    #[error("regression needs at least two points with positive values, got {0}")]
    DegenerateFit(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            field,
            reason: reason.into(),
        }
    }
}
