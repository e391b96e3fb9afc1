use std::path::{Path, PathBuf};

use thiserror::Error;

/// Errors produced by corpus loading, training, inference, and persistence.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input document (corpus, ontology, rule, or model file).
    #[error("{path}: parse error at line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    /// Well-formed document whose contents violate a corpus invariant.
    #[error("schema violation: {0}")]
    Schema(String),

    /// A precondition of an operation does not hold.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),

    #[error("rule file has no default entry")]
    MissingDefault,

    #[error("model format version mismatch: file has `{found}`, supported is `{supported}`")]
    VersionMismatch { found: String, supported: String },

    #[error("corrupt model file: {0}")]
    CorruptModel(String),
}

impl Error {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn parse(path: &Path, err: &serde_json::Error) -> Self {
        Error::Parse {
            path: path.to_path_buf(),
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
