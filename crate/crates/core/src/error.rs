use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration or argument violates a documented invariant.
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("parse error in {path} at byte offset {offset}: {reason}")]
    Parse {
        path: PathBuf,
        offset: u64,
        reason: String,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("example {index}: {source}")]
    Example {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("trial {trial} failed during {stage} at w = {w:?}: {source}")]
    Trial {
        trial: String,
        stage: &'static str,
        w: Option<f64>,
        #[source]
        source: Box<Error>,
    },

    /// A run completed only partially.
    #[error("{0}")]
    Failed(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// True for errors caused by bad input rather than by a failing run.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Invalid { .. } | Error::Parse { .. } | Error::Json(_) => true,
            Error::Example { source, .. } | Error::Trial { source, .. } => source.is_validation(),
            Error::Io { .. } | Error::Failed(_) => false,
        }
    }
}
