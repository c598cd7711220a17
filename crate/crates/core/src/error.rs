use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate sample in column `{column}`: zero variance")]
    DegenerateSample { column: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("model file: {0}")]
    ModelFile(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn degenerate(column: impl Into<String>) -> Self {
        Error::DegenerateSample {
            column: column.into(),
        }
    }
}
