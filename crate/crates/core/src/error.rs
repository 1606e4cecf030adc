use std::path::PathBuf;

use crate::layout::GroupName;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller violated a shape or value precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unknown layout `{0}`")]
    UnknownLayout(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("degenerate {group} normalization in frame {frame}: reference distance {distance:e}")]
    DegenerateFrame {
        frame: usize,
        group: GroupName,
        distance: f64,
    },

    #[error("checkpoint does not match model; offending parameters: {}", offenders.join(", "))]
    Transfer { offenders: Vec<String> },

    #[error("transfer schedule: {0}")]
    Schedule(String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
