use num_bigint::BigUint;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid probability table: {0}")]
    InvalidTable(String),

    #[error("setting {setting}: probabilities sum to {sum}, expected 1")]
    Normalization { setting: String, sum: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("enumeration budget exceeded: {required} strategies required, budget is {budget}")]
    BudgetExceeded { required: BigUint, budget: u64 },

    #[error("Hilbert-space dimension {dimension} exceeds the dense limit {limit}")]
    TooLarge { dimension: u128, limit: usize },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
