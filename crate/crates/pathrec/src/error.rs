use std::path::PathBuf;

/// Error type shared by every module in this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A data or schema file failed to parse; `line` is 1-based.
    #[error("{file}:{line}: {msg}")]
    Parse { file: String, line: usize, msg: String },

    /// The schema is self-inconsistent (unknown types, missing declarations, ...).
    #[error("schema: {0}")]
    Schema(String),

    /// Matrix or table dimensions do not conform.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An index is out of range for the structure it addresses.
    #[error("index out of range: {0}")]
    Index(String),

    /// A numeric invariant was violated (negative count, non-finite value, ...).
    #[error("numeric: {0}")]
    Numeric(String),

    /// Invalid configuration value or combination.
    #[error("config: {0}")]
    Config(String),

    /// A serialized artifact is malformed or has the wrong version.
    #[error("format: {0}")]
    Format(String),

    /// An operation would produce an empty dataset or empty result set.
    #[error("empty: {0}")]
    Empty(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
