//! Error type shared by all analysis modules.

use thiserror::Error;

/// Errors produced by series construction, criteria evaluation and ingestion.
#[derive(Debug, Error)]
pub enum Error {
    #[error("series is too short: need at least {needed} elements, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("degenerate series: all values equal ({value})")]
    DegenerateSeries { value: f64 },

    #[error("rank index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("expected an {expected}-ranked series")]
    WrongDirection { expected: &'static str },

    #[error("series length must be even, got {len}")]
    OddLength { len: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("value {value} at index {index} lies outside [0,1]: input is not normalized")]
    NotNormalized { index: usize, value: f64 },

    #[error("series mean {mean:e} exceeds centering tolerance (std {std:e})")]
    NotCentered { mean: f64, std: f64 },

    #[error("non-finite value at {offset}")]
    NonFiniteValue { offset: String },

    #[error("degenerate fit input: {reason}")]
    DegenerateInput { reason: String },

    #[error("fit did not converge")]
    UnconvergedFit,

    #[error("too few bits: need at least {needed}, got {got}")]
    TooFewBits { needed: usize, got: usize },

    #[error("autoregression coefficient must satisfy |rho| < 1, got {rho}")]
    InvalidRho { rho: f64 },

    #[error("sinusoid period must be >= 2, got {period}")]
    InvalidPeriod { period: f64 },

    #[error("bit depth must lie in 2..=24, got {bits}")]
    InvalidBitDepth { bits: u32 },

    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },

    #[error("parse error at line {line}: {reason}")]
    ParseError { line: usize, reason: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("report serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
