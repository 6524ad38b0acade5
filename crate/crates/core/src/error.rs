use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("invalid density operator: {0}")]
    InvalidState(String),

    #[error("invalid POM: {0}")]
    InvalidPom(String),

    #[error("POM `{name}` is not informationally complete (rank {rank} < {needed})")]
    NotInformationallyComplete { name: String, rank: usize, needed: usize },

    #[error("ascent did not converge within {iterations} iterations (best Q = {best_q:e})")]
    NonConvergence { iterations: usize, best_q: f64 },

    #[error("no proposals accepted after {proposals} draws ({physical} physical)")]
    NoAcceptance { proposals: u64, physical: u64 },

    #[error("chain start has zero target density")]
    ZeroDensityStart,

    #[error("empty sample")]
    EmptySample,

    #[error("value {value} outside support [{lo}, {hi}]")]
    OutsideSupport { value: f64, lo: f64, hi: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
