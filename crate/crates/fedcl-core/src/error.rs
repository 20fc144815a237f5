//! Error type shared by all simulator modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: expected shape {expected:?}, got {got:?}")]
    ShapeMismatch {
        context: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },

    #[error("{layer}: input width {got} does not match expected {expected}")]
    DimensionMismatch {
        layer: String,
        expected: usize,
        got: usize,
    },

    #[error("architectures differ: {0}")]
    ArchitectureMismatch(String),

    #[error("stale activation stash: {0}")]
    StaleStash(String),

    #[error("non-finite value produced in {0}")]
    NonFinite(String),

    #[error("cannot normalize an all-zero row (row {0})")]
    ZeroRow(usize),

    #[error("memory bank is empty")]
    EmptyBank,

    #[error("no remote features available for device {0}")]
    NoRemoteFeatures(usize),

    #[error("feature origin {found} does not match uploading device {expected}")]
    OriginMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("infeasible partition: {0}")]
    InfeasiblePartition(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("malformed file {path}: {reason}")]
    MalformedFile { path: String, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
