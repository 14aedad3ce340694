use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("inversion of zero")]
    ZeroInverse,

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("precision underflow: {0}")]
    PrecisionUnderflow(String),

    #[error("no z-regular element of order {c} found")]
    NotZRegular { c: u32 },

    #[error("parse error (line {line}): {msg}")]
    Parse { line: usize, msg: String },

    #[error("inconclusive: raise precision ({0})")]
    Inconclusive(String),

    #[error("internal assertion failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
