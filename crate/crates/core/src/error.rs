use std::path::PathBuf;

use thiserror::Error;

use crate::querylang::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed record: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("record {id:?}: embedding has dimension {found}, expected {expected}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: duplicate record id {id:?}")]
    DuplicateId { line: usize, id: String },

    #[error("line {line}: record {id:?} is invalid: {}", violations.join("; "))]
    InvalidRecord {
        line: usize,
        id: String,
        violations: Vec<String>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported snapshot format version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("snapshot integrity error in {section}: {message}")]
    Integrity { section: String, message: String },

    #[error(transparent)]
    Restriction(#[from] ParseError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
