use std::path::PathBuf;

use crate::bt::LeafAction;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolkit can report. Display output is always a single line.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "unknown leaf token `{token}`; valid tokens are: {}",
        LeafAction::valid_tokens()
    )]
    UnknownToken { token: String },

    #[error("malformed tree `{input}`: {reason}")]
    MalformedTree { input: String, reason: String },

    #[error("could not place {agents} non-overlapping agents in a {side} m arena after {attempts} attempts")]
    Capacity {
        agents: usize,
        side: f64,
        attempts: usize,
    },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("trajectory row {row}: {reason}")]
    Trajectory { row: usize, reason: String },

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("tree {tree}: {source}")]
    Individual {
        tree: String,
        #[source]
        source: Box<Error>,
    },

    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
