use thiserror::Error;

/// Errors raised by the library. Variants are grouped by the module that
/// produces them; the CLI maps every variant to exit code 2.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported pattern: {0}")]
    UnsupportedPattern(String),

    #[error("matrix entry ({i}, {j}) = {value} lies outside the pattern graph")]
    PatternViolation { i: usize, j: usize, value: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("factorization undefined: a_{m} = {value} < 0")]
    FactorizationUndefined { m: u32, value: f64 },

    #[error("no counterexample exists: {0}")]
    NoCounterexample(String),

    #[error("witness certification failed: {0}")]
    Certification(String),

    #[error("value out of representable range: {0}")]
    Range(String),

    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;
