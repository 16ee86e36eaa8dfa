//! Classical MAPF baselines and a brute-force oracle.

mod cbs;
mod low_level;
mod ma_astar;
mod oracle;
mod random;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::grid::{makespan, sum_of_costs, CollisionModel, GridLayout, Position};
use crate::layouts::{validate_layout, TaskSet, Violation};

pub use cbs::{solve_cbs, solve_cbs_with, CbsConfig};
pub use low_level::{low_level_astar, Constraint, ConstraintKind};
pub use ma_astar::{solve_ma_astar, solve_ma_astar_with, Heuristic, MaAstarConfig, MAX_STORED_STATES};
pub use oracle::{joint_bfs_oracle, OracleOptimum, OracleOutcome, DEFAULT_ORACLE_CAP};
pub use random::random_policy;

pub const DEFAULT_WALL_MS: u64 = 60_000;
pub const DEFAULT_HORIZON: usize = crate::episode::DEFAULT_T_MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverBudget {
    pub wall_ms: u64,
    pub max_expansions: Option<u64>,
    pub horizon: usize,
}

impl Default for SolverBudget {
    fn default() -> Self {
        SolverBudget {
            wall_ms: DEFAULT_WALL_MS,
            max_expansions: None,
            horizon: DEFAULT_HORIZON,
        }
    }
}

impl SolverBudget {
    pub fn with_wall_ms(wall_ms: u64) -> Self {
        SolverBudget {
            wall_ms,
            ..SolverBudget::default()
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if self.wall_ms == 0 || self.horizon == 0 || self.max_expansions == Some(0) {
            return Err(SolverError::Budget);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Solved,
    Timeout,
    Infeasible,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Solved => "solved",
            SolveStatus::Timeout => "timeout",
            SolveStatus::Infeasible => "infeasible",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub expansions: u64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: SolveStatus,
    /// One path per agent, ending at its final arrival; the agent stays on
    /// its goal afterwards. Empty unless solved.
    pub paths: Vec<Vec<Position>>,
    pub makespan: usize,
    pub sum_of_costs: usize,
    pub stats: SolverStats,
    /// Conflict model the paths are free of.
    pub model: CollisionModel,
}

impl Solution {
    pub(crate) fn solved(paths: Vec<Vec<Position>>, expansions: u64, started: Instant, model: CollisionModel) -> Self {
        let paths: Vec<Vec<Position>> = paths.into_iter().map(trim_path).collect();
        Solution {
            status: SolveStatus::Solved,
            makespan: makespan(&paths),
            sum_of_costs: sum_of_costs(&paths),
            paths,
            stats: SolverStats {
                expansions,
                wall_ms: elapsed_ms(started),
            },
            model,
        }
    }

    pub(crate) fn failed(status: SolveStatus, expansions: u64, started: Instant, model: CollisionModel) -> Self {
        Solution {
            status,
            paths: Vec::new(),
            makespan: 0,
            sum_of_costs: 0,
            stats: SolverStats {
                expansions,
                wall_ms: elapsed_ms(started),
            },
            model,
        }
    }

    pub fn is_solved(&self) -> bool {
        self.status == SolveStatus::Solved
    }

    /// File form with paths keyed by agent id.
    pub fn to_json(&self) -> serde_json::Value {
        let paths: serde_json::Map<String, serde_json::Value> = self
            .paths
            .iter()
            .enumerate()
            .map(|(i, p)| (i.to_string(), serde_json::to_value(p).expect("positions serialize")))
            .collect();
        serde_json::json!({
            "status": self.status,
            "makespan": self.makespan,
            "sum_of_costs": self.sum_of_costs,
            "wall_ms": self.stats.wall_ms,
            "expansions": self.stats.expansions,
            "paths": paths,
        })
    }
}

/// Drop the trailing goal-stays after the final arrival.
pub(crate) fn trim_path(mut path: Vec<Position>) -> Vec<Position> {
    let keep = crate::grid::arrival_time(&path) + 1;
    path.truncate(keep.min(path.len()));
    path
}

pub(crate) fn elapsed_ms(started: Instant) -> f64 {
    started.elapsed().as_secs_f64() * 1000.0
}

/// Wall-clock and expansion budget, polled inside search loops.
pub(crate) struct Deadline {
    started: Instant,
    limit: Duration,
    max_expansions: Option<u64>,
}

impl Deadline {
    pub(crate) fn new(budget: &SolverBudget) -> Self {
        Deadline {
            started: Instant::now(),
            limit: Duration::from_millis(budget.wall_ms),
            max_expansions: budget.max_expansions,
        }
    }

    pub(crate) fn started(&self) -> Instant {
        self.started
    }

    /// Checks the expansion count every call and the clock every 256th.
    pub(crate) fn exhausted(&self, expansions: u64) -> bool {
        if self.max_expansions.is_some_and(|m| expansions >= m) {
            return true;
        }
        expansions % 256 == 0 && self.started.elapsed() >= self.limit
    }
}

/// Reject task sets that no solver should see. Unreachable goals are left to
/// the solvers, which report them as infeasible.
pub(crate) fn check_tasks(grid: &GridLayout, tasks: &TaskSet) -> Result<(), SolverError> {
    if tasks.is_empty() {
        return Err(SolverError::Tasks("no agents".into()));
    }
    let report = validate_layout(grid, tasks);
    match report.violations.iter().find(|v| !matches!(v, Violation::Unreachable { .. })) {
        Some(v) => Err(SolverError::Tasks(v.to_string())),
        None => Ok(()),
    }
}

pub(crate) fn goals_reachable(grid: &GridLayout, tasks: &TaskSet) -> bool {
    tasks.iter().all(|t| grid.reachable(t.start, t.goal))
}
