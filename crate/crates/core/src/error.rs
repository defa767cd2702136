use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state ({x}, {y}): {reason}")]
    InvalidState { x: i32, y: i32, reason: &'static str },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("unknown built-in scenario `{0}` (expected `open` or `obstacles`)")]
    UnknownScenario(String),

    #[error("invalid dictionary: {0}")]
    Dictionary(String),

    #[error("dictionary has no phrases for the {0} domain")]
    EmptyDomain(&'static str),

    #[error("q-table shape mismatch: expected {expected_rows}x{expected_cols}, found {rows}x{cols}")]
    Shape { expected_rows: usize, expected_cols: usize, rows: usize, cols: usize },

    #[error("q-table was trained on scenario `{found}` but `{expected}` was requested")]
    ScenarioMismatch { expected: String, found: String },

    #[error("non-finite value: {0}")]
    NonFinite(f64),

    #[error("invalid hyperparameter: {0}")]
    Hyperparams(String),

    #[error("invalid experiment configuration: {0}")]
    Config(String),

    #[error("incomplete run directory {}: {reason}", path.display())]
    IncompleteRun { path: PathBuf, reason: String },

    #[error("document parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl From<toml::de::Error> for Error {
    fn from(err: toml::de::Error) -> Self {
        Error::Parse(err.to_string())
    }
}
