use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field has {got} values but grid has {expected} nodes")]
    FieldLength { expected: usize, got: usize },

    #[error("field contains a non-finite value at node {0}")]
    NonFinite(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("bound violation: {0}")]
    BoundViolation(String),

    #[error("normalization error: integral of v0 is {0}, expected 1")]
    NormalizationError(f64),

    #[error("tridiagonal solve failed at row {row} (pivot {pivot:e})")]
    LinearSolveFailure { row: usize, pivot: f64 },

    #[error("state invariant violated at t = {t}: {what}")]
    StateInvariantViolation { t: f64, what: String },

    #[error("no node with v and theta inside [{alpha0}, {beta0}] at t = {t}")]
    NoAdmissiblePoint { t: f64, alpha0: f64, beta0: f64 },

    #[error("too few snapshots: need {needed}, have {have}")]
    TooFewSnapshots { needed: usize, have: usize },

    #[error("non-positive test function value {value:e} at node {node}")]
    PositivityViolated { node: usize, value: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed data file {file}: {msg}")]
    Format { file: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
