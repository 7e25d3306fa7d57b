use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid segmentation for `{word}`: {message}")]
    Validation { word: String, message: String },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("cannot split: {0}")]
    Split(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("external model failed: {message}{}", format_stderr(.stderr))]
    Adapter { message: String, stderr: String },

    #[error("design matrix is rank deficient; dependent columns: {}", .columns.join(", "))]
    Singular { columns: Vec<String> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("config hash mismatch: ledger has {expected}, current config hashes to {found}")]
    ConfigHashMismatch { expected: String, found: String },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_stderr(stderr: &str) -> String {
    if stderr.trim().is_empty() {
        String::new()
    } else {
        format!("\n--- stderr ---\n{}", stderr.trim_end())
    }
}

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
