use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("topology mismatch: {0}")]
    TopologyMismatch(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("requested {requested} components but only {available} are available")]
    KeepExceedsRank { requested: usize, available: usize },

    #[error("cohort {0} has no members")]
    EmptyCohort(String),

    #[error("unknown cohort {0}")]
    UnknownCohort(String),

    #[error("empty region(s): {0}")]
    EmptyRegion(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("not enough samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("no valid pixel in the sampling neighborhood of uv ({u}, {v})")]
    InvalidNeighborhood { u: f64, v: f64 },

    #[error("model file: {0}")]
    ModelFile(String),

    #[error("image: {0}")]
    Image(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
