use thiserror::Error;

use crate::grid::Position;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GridError {
    #[error("grid must have at least one row and one column")]
    EmptyGrid,
    #[error("expected {expected} cells, got {got}")]
    CellCount { expected: usize, got: usize },
    #[error("a layout needs at least two free cells, found {0}")]
    TooFewFreeCells(usize),
    #[error("row {row} has {got} cells, expected {expected}")]
    Ragged { row: usize, expected: usize, got: usize },
    #[error("unknown cell character {ch:?} at row {row}, column {col}")]
    BadCell { row: usize, col: usize, ch: char },
    #[error("action code {0} is outside 0..=4")]
    BadAction(i64),
    #[error("missing action for agent {0}")]
    MissingAction(usize),
    #[error("unknown agent {0}")]
    UnknownAgent(usize),
    #[error("collision check got {current} current and {proposed} proposed positions")]
    AgentMismatch { current: usize, proposed: usize },
    #[error("unknown collision model {0:?} (expected strict or standard)")]
    UnknownCollisionModel(String),
}

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("unknown reference model {0:?}")]
    UnknownFamily(String),
    #[error("unknown variant {variant:?} for {family}")]
    UnknownVariant { family: String, variant: String },
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("layout needs at least {needed} free cells for {agents} agents, has {free}")]
    Capacity { agents: usize, needed: usize, free: usize },
    #[error("no valid task set after {0} resamples")]
    Infeasible(usize),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EpisodeError {
    #[error("invalid episode config: {0}")]
    Config(String),
    #[error("layout needs at least {needed} free cells for {agents} agents, has {free}")]
    Capacity { agents: usize, needed: usize, free: usize },
    #[error("episode finished")]
    Finished,
    #[error(transparent)]
    Input(#[from] GridError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DeadlockError {
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("need exceeds what remains of max for process {process}, resource {resource}")]
    NegativeNeed { process: usize, resource: usize },
    #[error("unknown process {0}")]
    UnknownProcess(usize),
    #[error("resource {resource} has {allocated} units allocated but only {instances} instances")]
    OverAllocated {
        resource: usize,
        allocated: u64,
        instances: u64,
    },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("solver budget must be positive")]
    Budget,
    #[error("task set is invalid: {0}")]
    Tasks(String),
    #[error("joint state space of {estimate} states exceeds the oracle cap of {cap}")]
    OracleCap { estimate: u128, cap: u128 },
    #[error("agent {agent} goal {goal} is not reachable")]
    Unreachable { agent: usize, goal: Position },
}
