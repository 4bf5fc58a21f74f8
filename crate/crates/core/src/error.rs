use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: parse error: {message}")]
    Parse { line: usize, message: String },

    /// A record or value violates one of its invariants. `field` names the
    /// offending field so callers can report it verbatim.
    #[error("{}invalid `{field}`: {reason}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid {
        line: Option<usize>,
        field: String,
        reason: String,
    },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("k = {k} out of range (1..={available})")]
    KOutOfRange { k: usize, available: usize },

    #[error("need at least {needed} points, found {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("covariance is not symmetric positive-definite")]
    NotPositiveDefinite,

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("model_config mismatch: {0} vs {1}")]
    ModelConfigMismatch(String, String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            line: None,
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Attaches a 1-based line number to invariant violations.
    pub(crate) fn at_line(self, n: usize) -> Self {
        match self {
            Error::Invalid { field, reason, .. } => Error::Invalid {
                line: Some(n),
                field,
                reason,
            },
            other => other,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
