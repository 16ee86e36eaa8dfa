use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use mapf_core::deadlock::DEFAULT_WINDOW;
use mapf_core::episode::DEFAULT_T_MAX;
use mapf_core::grid::{CollisionModel, GridLayout};
use mapf_core::layouts::{resolve_layout, TaskSet, VariantParams};
use mapf_core::solvers::{SolverBudget, DEFAULT_WALL_MS};

use crate::error::BenchError;

pub const DEFAULT_BASE_SEED: u64 = 42;
pub const SEED_ENV: &str = "MAPF_SEED";

/// Base seed from `MAPF_SEED`, falling back to 42.
pub fn base_seed_from_env() -> Result<u64, BenchError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| BenchError::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_BASE_SEED),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    MaAstar,
    Cbs,
    Random,
    /// A policy process speaking the observation/action codec over stdio.
    External,
}

impl Algorithm {
    pub fn id(self) -> &'static str {
        match self {
            Algorithm::MaAstar => "ma-astar",
            Algorithm::Cbs => "cbs",
            Algorithm::Random => "random",
            Algorithm::External => "external",
        }
    }

    pub fn is_planner(self) -> bool {
        matches!(self, Algorithm::MaAstar | Algorithm::Cbs)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ma-astar" | "maastar" | "ma-a*" | "astar" => Ok(Algorithm::MaAstar),
            "cbs" => Ok(Algorithm::Cbs),
            "random" => Ok(Algorithm::Random),
            "external" | "external-policy" => Ok(Algorithm::External),
            other => Err(BenchError::Config(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Parse a comma-separated algorithm list.
pub fn parse_algorithms(list: &str) -> Result<Vec<Algorithm>, BenchError> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

#[derive(Debug, Clone)]
pub struct BenchmarkSpec {
    pub grid: Arc<GridLayout>,
    /// Used for every instance instead of sampling, when present.
    pub fixed_tasks: Option<TaskSet>,
    pub n_agents: usize,
    pub instances: usize,
    pub algorithms: Vec<Algorithm>,
    pub base_seed: u64,
    pub budget: SolverBudget,
    /// Model the planners resolve and the replay engine enforces.
    pub collision: CollisionModel,
    pub t_max: usize,
    /// Restrict random and external policies to non-colliding actions.
    pub action_mask: bool,
    pub jobs: usize,
    pub deadlock_window: usize,
    /// Shell command for the external policy.
    pub policy_cmd: Option<String>,
}

impl BenchmarkSpec {
    pub fn new(grid: impl Into<Arc<GridLayout>>, n_agents: usize, instances: usize, algorithms: Vec<Algorithm>) -> Self {
        BenchmarkSpec {
            grid: grid.into(),
            fixed_tasks: None,
            n_agents,
            instances,
            algorithms,
            base_seed: DEFAULT_BASE_SEED,
            budget: SolverBudget {
                wall_ms: DEFAULT_WALL_MS,
                max_expansions: None,
                horizon: DEFAULT_T_MAX,
            },
            collision: CollisionModel::Standard,
            t_max: DEFAULT_T_MAX,
            action_mask: false,
            jobs: 1,
            deadlock_window: DEFAULT_WINDOW,
            policy_cmd: None,
        }
    }

    /// Spec for a reference model id or layout file, sampling tasks per
    /// instance. Set `fixed_tasks` to pin them instead.
    pub fn for_layout(
        layout: &str,
        variant: Option<&str>,
        n_agents: usize,
        instances: usize,
        algorithms: Vec<Algorithm>,
    ) -> Result<Self, BenchError> {
        let built = resolve_layout(layout, variant, &VariantParams::default(), None)?;
        Ok(BenchmarkSpec::new(built.grid, n_agents, instances, algorithms))
    }

    pub fn with_wall_ms(mut self, wall_ms: u64) -> Self {
        self.budget.wall_ms = wall_ms;
        self
    }

    pub fn seed_for(&self, instance: usize) -> u64 {
        self.base_seed.wrapping_add(instance as u64)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.instances < 1 {
            return Err(BenchError::Config("instance count must be at least 1".into()));
        }
        if self.n_agents < 1 {
            return Err(BenchError::Config("agent count must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(BenchError::Config("no algorithms selected".into()));
        }
        if self.jobs < 1 {
            return Err(BenchError::Config("jobs must be at least 1".into()));
        }
        if self.t_max < 1 {
            return Err(BenchError::Config("t_max must be at least 1".into()));
        }
        if self.algorithms.contains(&Algorithm::External) && self.policy_cmd.is_none() {
            return Err(BenchError::Config("the external algorithm needs a policy command".into()));
        }
        if let Some(tasks) = &self.fixed_tasks {
            if tasks.len() != self.n_agents {
                return Err(BenchError::Config(format!(
                    "{} agents requested but {} fixed tasks given",
                    self.n_agents,
                    tasks.len()
                )));
            }
        }
        let free = self.grid.free_count();
        if free < 2 * self.n_agents {
            return Err(BenchError::Capacity {
                agents: self.n_agents,
                free,
            });
        }
        self.budget.validate()?;
        Ok(())
    }
}
