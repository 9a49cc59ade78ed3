use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("capacity exceeded: {what} needs {required}, limit is {limit}")]
    Capacity {
        what: &'static str,
        required: u128,
        limit: u128,
    },

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("invalid sector: {0}")]
    InvalidSector(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e}, target {target:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        target: f64,
    },

    #[error("residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("degenerate energy range: E_max == E_min == {0}")]
    DegenerateRange(f64),

    #[error("need at least {needed} levels, got {got}")]
    TooFewLevels { needed: usize, got: usize },

    #[error("empty window: {0}")]
    EmptyWindow(String),

    #[error("state is not normalized: norm^2 = {0}")]
    NotNormalized(f64),

    #[error("moment order q = {0} is outside (0, inf]")]
    MomentDomain(f64),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("eigenvectors were not computed for this spectrum")]
    MissingEigenvectors,

    #[error("grid is not strictly increasing at index {0}")]
    NonMonotoneGrid(usize),

    #[error("sweep failed at t/g = {t_over_g}: {source}")]
    GridPoint {
        t_over_g: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("cache file {path}: {reason}")]
    Cache { path: PathBuf, reason: String },

    #[error("missing analysis `{analysis}` required for figure {figure}")]
    MissingAnalysis { figure: u8, analysis: &'static str },

    #[error("manifest has no successful points")]
    EmptyManifest,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
