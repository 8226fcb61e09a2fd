//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config error: {0}")]
    Config(String),

    #[error("corpus line {line}: {message}")]
    Corpus { line: usize, message: String },

    #[error("duplicate doc_id: {0}")]
    DuplicateDocId(String),

    #[error("index format error in {path}: {message}")]
    IndexFormat { path: PathBuf, message: String },

    #[error("empty query")]
    EmptyQuery,

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("template {name}: missing placeholder {placeholder}")]
    Template { name: String, placeholder: String },

    #[error("transport error{}: {message}", status.map(|s| format!(" (status {s})")).unwrap_or_default())]
    Transport { status: Option<u16>, message: String },

    #[error("missing API key: environment variable {0} not set")]
    MissingApiKey(String),

    #[error("generation error: {0}")]
    Generation(String),

    #[error("trust table line {line}: {message}")]
    TrustRow { line: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("citation {doc_id} does not resolve to dumped evidence")]
    CitationIntegrity { doc_id: String },
}

impl Error {
    /// Process exit code: 2 for usage/IO problems, 1 for data or
    /// validation failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 2,
            _ => 1,
        }
    }
}
