use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used to pick process exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Io,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("no {0} tokens left after filtering")]
    NoTokens(crate::corpus::Gender),

    #[error("single-class labels")]
    SingleClass,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite loss at iteration {iteration}; the step size diverges")]
    NonFiniteLoss { iteration: usize },

    #[error("empty evaluation set")]
    EmptyTestSet,

    #[error("at least two runs are required, got {0}")]
    TooFewRuns(usize),

    #[error("run {run} failed: {reason}")]
    RunFailed { run: usize, reason: String },

    #[error("empty word list")]
    EmptyWordList,

    #[error("at least two documents are required, got {0}")]
    TooFewDocuments(usize),

    #[error("duplicate category `{0}`")]
    DuplicateCategory(String),

    #[error("category `{0}` has no members")]
    EmptyCategory(String),

    #[error("model was trained on a different vocabulary (expected {expected}, found {found})")]
    FingerprintMismatch { expected: String, found: String },

    #[error("fetch failed: {0}")]
    Fetch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } => ErrorKind::Io,
            Error::Config(_) => ErrorKind::Config,
            _ => ErrorKind::Data,
        }
    }
}
