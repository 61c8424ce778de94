use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, LsrError>;

#[derive(Debug, Error)]
pub enum LsrError {
    #[error("term id {id} out of range for vocabulary of size {vocab_size}")]
    TermOutOfRange { id: u32, vocab_size: usize },

    #[error("invalid weight {weight} for term {term}: weights must be finite and non-negative")]
    InvalidWeight { term: u32, weight: f64 },

    #[error("shape mismatch in {what}: expected {expected}, got {actual}")]
    Shape {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("degenerate corpus statistics: {0}")]
    DegenerateStats(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("duplicate id {0}")]
    DuplicateId(String),

    #[error("encoder {0} is not differentiable")]
    NotDifferentiable(String),

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("index format: {0}")]
    Format(String),

    #[error("incompatible artifacts: {0}")]
    Mismatch(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl LsrError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        LsrError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LsrError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the filesystem rather than by invalid input.
    pub fn is_io(&self) -> bool {
        matches!(self, LsrError::Io { .. })
    }
}
