use thiserror::Error;

/// Errors produced by samplers, weighting schemes, and diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    Config(String),

    #[error("chain is empty")]
    EmptyChain,

    #[error("degenerate pair: both log scores are -inf")]
    DegeneratePair,

    #[error("nu must be >= 1")]
    InvalidNu,

    #[error("reducible pair transition matrix (an off-diagonal entry is zero)")]
    ReduciblePair,

    #[error("current state has zero density (log score is -inf)")]
    ZeroCurrentScore,

    #[error("all log scores are -inf")]
    AllScoresNegInf,

    #[error("non-finite log score (NaN)")]
    NanScore,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("target does not provide a gradient (required by the HMC kernel)")]
    MissingGradient,

    #[error("mass matrix is not symmetric positive-definite")]
    MassNotPd,

    #[error("non-finite state encountered at iteration {iteration}")]
    NonFiniteState { iteration: usize },

    #[error("series too short: {len} < {min}")]
    SeriesTooShort { len: usize, min: usize },

    #[error("degenerate series: zero variance")]
    DegenerateSeries,

    #[error("non-positive variance estimate ({0})")]
    NonPositiveVariance(f64),

    #[error("insufficient samples: {got} < {min}")]
    InsufficientSamples { got: usize, min: usize },

    #[error("target does not expose marginal quantiles; use the two-sample check")]
    NoMarginalQuantiles,

    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
