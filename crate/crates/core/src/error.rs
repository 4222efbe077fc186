use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: expected n_grid = {expected}, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("truncation N = {trunc} exceeds the field grid n_grid = {n_grid}")]
    TruncationTooLarge { trunc: usize, n_grid: usize },

    #[error("non-finite value encountered at t = {time}")]
    NonFinite { time: f64 },

    #[error("integer overflow while evaluating the phase of ({0}, {1}, {2}, {3})")]
    PhaseOverflow(i64, i64, i64, i64),

    #[error("quad ({0}, {1}, {2}, {3}) violates n = n1 - n2 + n3")]
    NotOnPlane(i64, i64, i64, i64),

    #[error("divisor count requires m >= 1, got {0}")]
    NonPositive(i64),

    #[error("trajectory too short: need at least {needed} states, have {have}")]
    TrajectoryTooShort { needed: usize, have: usize },

    #[error("trajectory steps are not uniform (step {index} has width {width}, expected {expected})")]
    NonUniformSteps { index: usize, width: f64, expected: f64 },

    #[error("trajectory variant {found} is not supported here (expected {expected})")]
    WrongVariant { expected: &'static str, found: String },

    #[error("index {index} out of range for trajectory of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("rejection sampling acceptance {rate:.3e} below 1e-4; increase r (currently {r})")]
    LowAcceptance { rate: f64, r: f64 },

    #[error("zero effective sample size in estimator `{0}`")]
    ZeroEffectiveSampleSize(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown configuration keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
