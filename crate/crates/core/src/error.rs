use thiserror::Error;

/// Errors raised across the synthesis, ranking and rerouting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid plant: {0}")]
    InvalidPlant(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("matrix is not Hurwitz (spectral abscissa {abscissa:e})")]
    NotHurwitz { abscissa: f64 },

    #[error("linear solve is numerically singular: {0}")]
    SingularSolve(String),

    #[error("gain is not stabilizing")]
    NotStabilizing,

    #[error("Riccati iteration failed: {0}")]
    RiccatiFailure(String),

    #[error("every line-search trial left the stabilizing set")]
    LostStabilizability,

    #[error("line search failed to find a decrease after {0} backtracks")]
    LineSearchFailure(usize),

    #[error("iteration limit of {0} reached")]
    MaxIterations(usize),

    #[error("sparsity pattern admits no stabilizing gain: {0}")]
    PatternNotStabilizable(String),

    #[error("sweep result is empty")]
    EmptySweep,

    #[error("rerouting assumption violated: {0}")]
    InvalidAssumption(String),

    #[error("priority index {index} outside 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("countermeasure is infeasible for this attack")]
    InfeasibleOutcome,

    #[error("unknown render format `{0}`")]
    UnknownFormat(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
