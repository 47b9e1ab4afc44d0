use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("rank deficient")]
    RankDeficient,
    #[error("input not primitive")]
    NotPrimitive,
    #[error("quadratic form is not positive definite")]
    NotPositiveDefinite,
    #[error("invalid shell parameters: {0}")]
    InvalidShell(String),
    #[error("majorant invalid for this k")]
    MajorantInvalid,
    #[error("size guard exceeded: {tuples} tuples > limit {limit}")]
    GuardExceeded { tuples: u128, limit: u128 },
    #[error("coefficient vector has empty support")]
    EmptySupport,
    #[error("grid side {n} aliases frequencies up to {max_freq}")]
    Aliasing { n: usize, max_freq: i64 },
    #[error("unknown bound id `{0}`")]
    UnknownBoundId(String),
    #[error("invalid exponent p = {0}")]
    InvalidExponent(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
