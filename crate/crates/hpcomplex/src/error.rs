use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum HpError {
    #[error("rank mismatch: expected {expected}, got {got}")]
    RankMismatch { expected: usize, got: usize },

    #[error("algebra mismatch: {0}")]
    AlgebraMismatch(String),

    #[error("odd dimension required, complex has n = {0}")]
    OddDimensionRequired(usize),

    #[error("operator singular at fiber {fiber} (theta = {theta})")]
    SingularFiber { fiber: usize, theta: f64 },

    #[error("not a chain map: max violation {violation}")]
    NotAChainMap { violation: f64 },

    #[error("insufficient samples: need at least {needed}, got {got} (aliasing risk)")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("loop too wild: determinant phase step exceeds pi/2 at {samples} samples")]
    LoopTooWild { samples: usize },

    #[error("infeasible ranks: {0}")]
    InfeasibleRanks(String),

    #[error("inconsistent gamma data: {0}")]
    InconsistentGammaData(String),

    #[error("incompatible shapes: {0}")]
    IncompatibleShapes(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
