//! Episode interchange format: parsing, canonical serialization, validation
//! and import of bird's-eye-view trajectory tables.

mod episode;
mod tsv;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use episode::{
    episode_to_value, parse_episode, parse_episode_with, serialize_episode, validate,
    validate_with, ParseOptions, FORMAT_VERSION, UNKNOWN_FIELDS_KEY,
};
pub use tsv::{import_tsv, import_tsv_with, TsvOptions};

/// Radius applied to agents whose source carries no body extent.
pub const DEFAULT_AGENT_RADIUS: f64 = 0.3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("malformed document at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("invariant violated at {path}: {message}")]
    Invariant { path: String, message: String },
    #[error("malformed row {row}: {message}")]
    MalformedRow { row: usize, message: String },
    #[error("robot `{0}` does not appear in the input")]
    NoRobot(String),
    #[error("input contains no trajectory rows")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// One problem found while validating a document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub severity: Severity,
    /// JSON-pointer style location ("" for the whole document).
    pub path: String,
    pub message: String,
}

impl ValidationIssue {
    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}
