use thiserror::Error;

use crate::scenario::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("reducible chain: no unique stationary distribution")]
    ReducibleChain,

    #[error("{what} did not converge after {iterations} iterations")]
    NotConverged { what: &'static str, iterations: usize },

    #[error("no medial axis: {0}")]
    NoAxis(String),

    #[error("unreachable: {0}")]
    Unreachable(String),

    #[error("unstable queue: utilization {rho} >= 1")]
    Unstable { rho: f64 },

    #[error("invalid action: node {node} cannot choose {action}")]
    InvalidAction { node: NodeId, action: NodeId },

    #[error("missing continuation value for node {0}")]
    MissingContinuation(NodeId),

    #[error("not a probability vector for player {player}: {reason}")]
    NonSimplex { player: usize, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dead end at node {0}: no candidates")]
    DeadEnd(NodeId),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("{0}")]
    Other(String),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
