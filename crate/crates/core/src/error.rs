use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidSpec(String),
    /// Largest modulus among the companion-matrix eigenvalues.
    #[error("autoregression is not causal stationary (largest root modulus {0:.6})")]
    NonStationary(f64),
    #[error("empty input")]
    Empty,
    #[error("input too short: need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("degenerate series: {0}")]
    DegenerateSeries(&'static str),
    #[error("estimate {0} lies outside the domain of the transform")]
    DomainError(f64),
    #[error("singular autocorrelation system (pivot {0:e})")]
    SingularMatrix(f64),
    #[error("infeasible segmentation constraints: {0}")]
    Infeasible(String),
    #[error("segment [{i}, {j}] out of range for a series of length {len}")]
    OutOfRange { i: usize, j: usize, len: usize },
    #[error("invalid change-point vector: {0}")]
    InvalidVector(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
