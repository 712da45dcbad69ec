use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("duplicate event id '{0}'")]
    DuplicateEvent(String),

    #[error("duplicate role id '{0}'")]
    DuplicateRole(String),

    #[error("unknown role '{0}'")]
    UnknownRole(String),

    #[error("unknown event '{0}'")]
    UnknownEvent(String),

    #[error("corpus is frozen; no further mutation is permitted")]
    Frozen,

    #[error("corpus must be frozen before statistics are computed")]
    NotFrozen,

    #[error("corpus contains no events")]
    EmptyCorpus,

    /// A context factor that occurs in no event has no defined IEF.
    #[error(
        "context factor{} does not occur in the corpus",
        .0.as_ref().map(|p| format!(" '{p}'")).unwrap_or_default()
    )]
    UndefinedFactor(Option<String>),

    #[error("inconsistent counts: {0}")]
    Inconsistent(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(source_name: impl Into<String>, line: usize, message: impl ToString) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            line,
            message: message.to_string(),
        }
    }

    /// Process exit code: 1 for bad input or configuration, 2 for violated
    /// internal invariants.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotFrozen | Error::Inconsistent(_) | Error::DimensionMismatch { .. } => 2,
            _ => 1,
        }
    }
}
