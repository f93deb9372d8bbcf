use std::path::PathBuf;

use crate::dataset::AgentId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{file}: schema error: {message}")]
    Schema { file: PathBuf, message: String },

    #[error("integrity error for agent {agent}: {message}")]
    Integrity { agent: AgentId, message: String },

    #[error("recording error: {0}")]
    Recording(String),

    #[error("frame {frame} out of range (recording has {frame_count} frames)")]
    FrameOutOfBounds { frame: u32, frame_count: u32 },

    #[error("agent {agent} is not present at frame {frame}")]
    AgentNotPresent { agent: AgentId, frame: u32 },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("pair ({ego}, {vru}) updated out of order: frame {frame} after {last}")]
    Sequencing {
        ego: AgentId,
        vru: AgentId,
        frame: u32,
        last: u32,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("run aborted at frame {frame}")]
    Frame {
        frame: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Schema {
            file: path.into(),
            message: message.into(),
        }
    }

    /// The message followed by every underlying cause.
    pub fn chain(&self) -> String {
        let mut out = self.to_string();
        let mut cur = std::error::Error::source(self);
        while let Some(e) = cur {
            out.push_str(": ");
            out.push_str(&e.to_string());
            cur = e.source();
        }
        out
    }

    /// True for errors caused by malformed or inconsistent input data.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Schema { .. }
            | Error::Integrity { .. }
            | Error::Recording(_)
            | Error::Csv { .. }
            | Error::Json(_) => true,
            Error::Frame { source, .. } => source.is_data_error(),
            _ => false,
        }
    }
}
