use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("enumeration of {what} needs {size} items, above the cap of {cap}")]
    EnumerationTooLarge { what: &'static str, size: u128, cap: u64 },

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),

    #[error("inconsistent correlation tensor: reconstructed probability {value:e} at setting {setting}, outcome {outcome}")]
    InconsistentTensor {
        value: f64,
        setting: usize,
        outcome: usize,
    },

    #[error("unsupported weight: {0}")]
    UnsupportedWeight(String),

    #[error("phase angle {theta} outside [0, {limit}]; use exact enumeration instead")]
    PhaseOutOfRange { theta: f64, limit: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
