use std::path::PathBuf;

use thiserror::Error;

use crate::scenario::{CellId, Channel};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no candidate sites")]
    NoCandidateSites,

    #[error("time out of range: step {t} outside horizon of {horizon} steps")]
    TimeOutOfRange { t: usize, horizon: usize },

    #[error("unknown cell {0}")]
    UnknownCell(CellId),

    #[error("empty network")]
    EmptyNetwork,

    #[error("channel {channel} not allocated at cell {cell}")]
    ChannelNotAllocated { cell: CellId, channel: Channel },

    #[error("no correlation basis: reference demand sums to zero")]
    NoCorrelationBasis,

    #[error("channel-saturated: cell {0} already holds every channel")]
    ChannelSaturated(CellId),

    #[error("site-saturated: no free candidate sites")]
    SiteSaturated,

    #[error("empty history for cell {0}")]
    EmptyHistory(CellId),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ledger replay failed at entry {index}: {reason}")]
    Replay { index: usize, reason: String },

    #[error("{} invariant violation(s): {}", .0.len(), .0.join("; "))]
    Invariants(Vec<String>),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by unreadable, unwritable or malformed files.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Parse { .. })
    }
}
