use std::path::PathBuf;

use thiserror::Error;

use mapf_core::{EpisodeError, LayoutError, SolverError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{agents} agents need {} free cells, the layout has {free}", 2 * .agents)]
    Capacity { agents: usize, free: usize },
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    /// A solver plan that the episode engine does not execute as claimed.
    #[error("instance {instance}: {algorithm} plan failed replay: {reason}")]
    Replay {
        instance: usize,
        algorithm: String,
        reason: String,
    },
    #[error("external policy: {0}")]
    Policy(String),
    #[error("heat map layout mismatch: expected {expected}, got {got}")]
    LayoutMismatch { expected: String, got: String },
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", .path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{}: {source}", .path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl BenchError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> BenchError {
        let path = path.into();
        move |source| BenchError::Io { path, source }
    }
}
