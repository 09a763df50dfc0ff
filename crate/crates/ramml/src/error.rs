use thiserror::Error;

/// Errors shared across the estimation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("weighted Gram matrix is singular to working precision (condition estimate {cond:.3e})")]
    SingularSystem { cond: f64 },

    #[error("total weight is not positive")]
    ZeroTotalWeight,

    #[error("invalid long-tailed symmetric parameters: p = {p}, sigma = {sigma}")]
    InvalidParams { p: f64, sigma: f64 },

    #[error("equicorrelation matrix with m = {m}, rho = {rho} is not positive definite")]
    InvalidCorrelation { m: usize, rho: f64 },

    #[error("scale estimate degenerated to zero")]
    DegenerateScale,

    #[error("too few observations: n = {n} with m = {m} predictors")]
    TooFewObservations { n: usize, m: usize },

    #[error("every consecutive pair of predictor sums is tied")]
    AllTiesInV,

    #[error("leverage direction degenerated to the zero vector")]
    DegenerateDirection,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
