use thiserror::Error;

/// Errors raised by the planning toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("planner starved: no simulation completed within the budget")]
    PlannerStarved,

    #[error("search tree root has no expanded actions")]
    NoRootActions,

    #[error("subgoal sampling failed: {0}")]
    Subgoal(String),

    #[error("scenario generation failed: {0}")]
    Generation(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
