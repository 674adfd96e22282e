use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("support is not symmetric about the origin")]
    AsymmetricSupport,

    #[error("no zero set found after {draws} line draws")]
    NoZeroSetFound { draws: usize },

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("null space has dimension {dim}; recovery is not unique (under-sampled)")]
    AmbiguousRecovery { dim: usize },

    #[error("feature matrix has no null vector; support too small or samples off-surface")]
    NoAnnihilator,

    #[error("anchor candidate pool has {available} points, need {needed}")]
    InsufficientCandidates { available: usize, needed: usize },

    #[error("normal equations are numerically singular beyond ridge rescue")]
    DegenerateSystem,

    #[error("objective became non-finite during iteration {iteration}")]
    NonFiniteObjective { iteration: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
