use thiserror::Error;

/// Errors raised by input validation across the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CvError {
    #[error("k must divide n (n = {n}, k = {k})")]
    FoldsDoNotDivide { n: u64, k: u64 },

    #[error("k must satisfy 2 <= k <= n (n = {n}, k = {k})")]
    FoldCountOutOfRange { n: u64, k: u64 },

    #[error("m must divide n (n = {n}, m = {m})")]
    FoldSizeDoesNotDivide { n: u64, m: u64 },

    #[error("m must satisfy 1 <= m <= n/2 (n = {n}, m = {m})")]
    FoldSizeOutOfRange { n: u64, m: u64 },

    #[error("m must satisfy {lo} <= m <= n/{divisor} for this approximation (n = {n}, m = {m})")]
    OutsideRegime { n: u64, m: u64, lo: u64, divisor: u64 },

    #[error("n = {n} exceeds the exact-rational cap {cap}; use log-space mode")]
    ExactCapExceeded { n: u64, cap: u64 },

    #[error("n = {n} exceeds the brute-force cap {cap}")]
    BruteForceCapExceeded { n: u64, cap: u64 },

    #[error("n must be even (n = {n})")]
    OddSampleSize { n: u64 },

    #[error("n must be divisible by 3 (n = {n})")]
    NotMultipleOfThree { n: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("algorithm {algorithm} is not supported with data {data}")]
    IncompatibleAlgorithm { algorithm: String, data: String },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, CvError>;
