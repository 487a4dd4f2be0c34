use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    NotFound(PathBuf),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),

    #[error("truncated header: {0}")]
    TruncatedHeader(String),

    #[error("truncated data: chunk declares {declared} bytes but only {available} are present")]
    TruncatedData { declared: usize, available: usize },

    #[error("malformed file {what}: {reason}")]
    Malformed { what: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("signal too short: {0}")]
    TooShort(String),

    #[error("frame grid mismatch: expected {expected} frames, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("only {found} glottal closure instants found, at least {required} needed; supply more voiced speech")]
    InsufficientGcis { found: usize, required: usize },

    #[error("alignment line {line}: {message}")]
    Alignment { line: usize, message: String },

    #[error("unknown phone symbol {0:?}")]
    UnknownPhone(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}; learning rate likely too high")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::NotFound(path)
        } else {
            Error::Io { path, source }
        }
    }

    pub(crate) fn malformed(what: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Malformed { what: what.into(), reason: reason.into() }
    }
}
