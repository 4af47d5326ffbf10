use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("operation requires prime d, got d={0}")]
    CompositeD(usize),
    #[error("resource cap exceeded: {what} reached {reached} (limit {limit}); progress: {progress}")]
    CapExceeded {
        what: &'static str,
        reached: u128,
        limit: u128,
        progress: String,
    },
    #[error("scenario mismatch: expected {expected}, got {got}")]
    ScenarioMismatch { expected: String, got: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("not achievable: {0}")]
    NotAchievable(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
