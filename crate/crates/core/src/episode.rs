//! The multi-agent episode loop: reset, step, observations, rewards and
//! termination.
//!
//! Per step, each agent `i` earns
//!
//! ```text
//! r_i(t) = alpha * J_i(t) + beta * K(t) + gamma * C_i(t)
//! ```
//!
//! where `J_i` marks the first arrival at the goal, `K` marks every agent
//! standing on its goal at once (which also terminates the episode) and
//! `C_i` marks involvement in a collision. Colliding moves are cancelled:
//! flagged agents keep their cells while the others move.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::EpisodeError;
use crate::grid::{apply_action, detect_collisions, Action, CollisionModel, GridLayout, JointAction, Position};
use crate::layouts::{sample_tasks, validate_layout, TaskSet};
use crate::rng_from_seed;

pub const DEFAULT_T_MAX: usize = 100;
pub const DEFAULT_SENSOR_RANGE: usize = 2;

/// Cell codes shared by both observation forms.
pub mod cell {
    pub const EMPTY: u8 = 0;
    pub const WALL: u8 = 1;
    pub const AGENT: u8 = 2;
    pub const OWN_GOAL: u8 = 3;
    pub const OTHER_GOAL: u8 = 4;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            alpha: 0.5,
            beta: 1.0,
            gamma: -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObsMode {
    /// Full grid for a centralized controller.
    Cte,
    /// Square window around each agent plus its position and goal.
    #[default]
    #[serde(alias = "ctde", alias = "dte")]
    Local,
}

impl std::str::FromStr for ObsMode {
    type Err = EpisodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cte" => Ok(ObsMode::Cte),
            "local" | "ctde" | "dte" => Ok(ObsMode::Local),
            other => Err(EpisodeError::Config(format!("unknown observation mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeConfig {
    pub grid: Arc<GridLayout>,
    pub n_agents: usize,
    /// Fixed tasks, or `None` to sample with the reset seed.
    pub tasks: Option<TaskSet>,
    pub t_max: usize,
    pub obs_mode: ObsMode,
    pub sensor_range: usize,
    pub collision: CollisionModel,
    pub action_mask: bool,
    pub weights: RewardWeights,
}

impl EpisodeConfig {
    pub fn new(grid: impl Into<Arc<GridLayout>>, n_agents: usize) -> Self {
        EpisodeConfig {
            grid: grid.into(),
            n_agents,
            tasks: None,
            t_max: DEFAULT_T_MAX,
            obs_mode: ObsMode::default(),
            sensor_range: DEFAULT_SENSOR_RANGE,
            collision: CollisionModel::default(),
            action_mask: false,
            weights: RewardWeights::default(),
        }
    }

    pub fn with_tasks(grid: impl Into<Arc<GridLayout>>, tasks: TaskSet) -> Self {
        let mut cfg = EpisodeConfig::new(grid, tasks.len());
        cfg.tasks = Some(tasks);
        cfg
    }

    pub fn validate(&self) -> Result<(), EpisodeError> {
        if self.t_max < 1 {
            return Err(EpisodeError::Config("t_max must be at least 1".into()));
        }
        if self.sensor_range < 1 {
            return Err(EpisodeError::Config("sensor_range must be at least 1".into()));
        }
        if self.n_agents < 1 {
            return Err(EpisodeError::Config("at least one agent is required".into()));
        }
        let free = self.grid.free_count();
        if free < 2 * self.n_agents {
            return Err(EpisodeError::Capacity {
                agents: self.n_agents,
                needed: 2 * self.n_agents,
                free,
            });
        }
        if let Some(tasks) = &self.tasks {
            if tasks.len() != self.n_agents {
                return Err(EpisodeError::Config(format!(
                    "{} agents configured but {} tasks given",
                    self.n_agents,
                    tasks.len()
                )));
            }
            if let Some(v) = validate_layout(&self.grid, tasks).violations.first() {
                return Err(EpisodeError::Config(v.to_string()));
            }
        }
        Ok(())
    }
}

/// Full-grid observation for a centralized controller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CteObservation {
    /// `rows x cols` cell codes. Every goal is the controller's own, so
    /// goals encode as 3; agents encode as 2 and take precedence.
    pub grid: Vec<Vec<u8>>,
    pub positions: Vec<Position>,
    pub goals: Vec<Position>,
}

/// One agent's partial view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalObservation {
    /// `(2R+1) x (2R+1)` window centred on the agent.
    pub grid: Vec<Vec<u8>>,
    pub pos: Position,
    pub goal: Position,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Observation {
    Cte(CteObservation),
    Local(Vec<LocalObservation>),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepInfo {
    /// Agents flagged for a collision this step.
    pub collisions: Vec<usize>,
    /// Agents that reached their goal for the first time this step.
    pub reached: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub rewards: Vec<f64>,
    pub terminated: bool,
    pub truncated: bool,
    pub info: StepInfo,
}

/// One executed joint step, in export order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Timestep reached by this step.
    pub t: usize,
    pub actions: Vec<u8>,
    pub positions: Vec<Position>,
    pub rewards: Vec<f64>,
    pub flags: Vec<bool>,
    pub collisions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeState {
    config: Arc<EpisodeConfig>,
    tasks: TaskSet,
    t: usize,
    positions: Vec<Position>,
    reached: Vec<bool>,
    returns: Vec<f64>,
    terminated: bool,
    truncated: bool,
    trace: Vec<TraceRecord>,
}

impl EpisodeState {
    /// Start an episode. Tasks come from the config or, when absent, are
    /// sampled from `seed`.
    pub fn reset(config: impl Into<Arc<EpisodeConfig>>, seed: u64) -> Result<Self, EpisodeError> {
        let config = config.into();
        config.validate()?;
        let tasks = match &config.tasks {
            Some(tasks) => tasks.clone(),
            None => sample_tasks(&config.grid, config.n_agents, &mut rng_from_seed(seed))
                .map_err(|e| EpisodeError::Config(e.to_string()))?,
        };
        let positions = tasks.starts();
        let n = tasks.len();
        Ok(EpisodeState {
            config,
            tasks,
            t: 0,
            positions,
            reached: vec![false; n],
            returns: vec![0.0; n],
            terminated: false,
            truncated: false,
            trace: Vec::new(),
        })
    }

    pub fn config(&self) -> &EpisodeConfig {
        &self.config
    }

    pub fn grid(&self) -> &GridLayout {
        &self.config.grid
    }

    pub fn tasks(&self) -> &TaskSet {
        &self.tasks
    }

    pub fn n_agents(&self) -> usize {
        self.positions.len()
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn goal(&self, agent: usize) -> Position {
        self.tasks.0[agent].goal
    }

    /// Persistent "has reached its goal at least once" flags.
    pub fn reached_flags(&self) -> &[bool] {
        &self.reached
    }

    pub fn at_goal(&self, agent: usize) -> bool {
        self.positions[agent] == self.goal(agent)
    }

    pub fn all_at_goal(&self) -> bool {
        (0..self.n_agents()).all(|i| self.at_goal(i))
    }

    pub fn returns(&self) -> &[f64] {
        &self.returns
    }

    pub fn terminated(&self) -> bool {
        self.terminated
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn is_finished(&self) -> bool {
        self.terminated || self.truncated
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    /// Advance one joint step.
    pub fn step(&mut self, actions: &JointAction) -> Result<StepResult, EpisodeError> {
        if self.is_finished() {
            return Err(EpisodeError::Finished);
        }
        let n = self.n_agents();
        if actions.len() < n {
            return Err(crate::error::GridError::MissingAction(actions.len()).into());
        }
        if actions.len() > n {
            return Err(crate::error::GridError::UnknownAgent(n).into());
        }
        let grid = Arc::clone(&self.config.grid);

        let effective: Vec<Action> = (0..n)
            .map(|i| {
                let a = actions.0[i];
                if self.config.action_mask && !self.action_mask(i).contains(&a) {
                    Action::Stay
                } else {
                    a
                }
            })
            .collect();
        let proposed: Vec<Position> = (0..n)
            .map(|i| apply_action(self.positions[i], effective[i], &grid).position())
            .collect();
        let report = detect_collisions(&self.positions, &proposed, self.config.collision)?;

        // Flagged agents stay. A mover whose target is held by an agent that
        // ends up staying is blocked as well, repeated until stable.
        let mut stays: Vec<bool> = (0..n)
            .map(|i| report.flags[i] || proposed[i] == self.positions[i])
            .collect();
        loop {
            let mut changed = false;
            for i in 0..n {
                if stays[i] {
                    continue;
                }
                if (0..n).any(|j| j != i && stays[j] && self.positions[j] == proposed[i]) {
                    stays[i] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for i in 0..n {
            if !stays[i] {
                self.positions[i] = proposed[i];
            }
        }
        debug_assert!(pairwise_distinct(&self.positions));

        self.t += 1;
        let w = self.config.weights;
        let mut newly = Vec::new();
        let mut first = vec![false; n];
        for i in 0..n {
            let on_goal = self.at_goal(i);
            if on_goal && !self.reached[i] {
                first[i] = true;
                newly.push(i);
            }
            self.reached[i] |= on_goal;
        }
        let all = self.all_at_goal();
        let rewards: Vec<f64> = (0..n)
            .map(|i| {
                let j = if first[i] { 1.0 } else { 0.0 };
                let k = if all { 1.0 } else { 0.0 };
                let c = if report.flags[i] { 1.0 } else { 0.0 };
                w.alpha * j + w.beta * k + w.gamma * c
            })
            .collect();
        for (ret, r) in self.returns.iter_mut().zip(&rewards) {
            *ret += r;
        }
        self.terminated = all;
        self.truncated = !all && self.t >= self.config.t_max;

        let collisions = report.flagged();
        self.trace.push(TraceRecord {
            t: self.t,
            actions: actions.codes(),
            positions: self.positions.clone(),
            rewards: rewards.clone(),
            flags: self.reached.clone(),
            collisions: collisions.clone(),
        });
        Ok(StepResult {
            observation: self.observe(),
            rewards,
            terminated: self.terminated,
            truncated: self.truncated,
            info: StepInfo {
                collisions,
                reached: newly,
            },
        })
    }

    /// Observation in the configured mode.
    pub fn observe(&self) -> Observation {
        match self.config.obs_mode {
            ObsMode::Cte => Observation::Cte(self.observe_cte()),
            ObsMode::Local => Observation::Local(
                (0..self.n_agents())
                    .map(|i| self.observe_local(i, self.config.sensor_range))
                    .collect(),
            ),
        }
    }

    pub fn observe_cte(&self) -> CteObservation {
        let grid = self.grid();
        let mut codes = vec![vec![cell::EMPTY; grid.cols()]; grid.rows()];
        for (x, row) in codes.iter_mut().enumerate() {
            for (y, c) in row.iter_mut().enumerate() {
                if grid.is_wall(Position::new(x, y)) {
                    *c = cell::WALL;
                }
            }
        }
        for g in self.tasks.goals() {
            codes[g.x][g.y] = cell::OWN_GOAL;
        }
        for p in &self.positions {
            codes[p.x][p.y] = cell::AGENT;
        }
        CteObservation {
            grid: codes,
            positions: self.positions.clone(),
            goals: self.tasks.goals(),
        }
    }

    /// Window of radius `range` around `agent`. The agent does not see
    /// itself: its own cell shows what lies underneath.
    pub fn observe_local(&self, agent: usize, range: usize) -> LocalObservation {
        let grid = self.grid();
        let centre = self.positions[agent];
        let own_goal = self.goal(agent);
        let r = range as isize;
        let grid_codes = (-r..=r)
            .map(|dx| {
                (-r..=r)
                    .map(|dy| match centre.offset(dx, dy) {
                        Some(p) if grid.is_free(p) => {
                            if self.positions.iter().enumerate().any(|(j, q)| j != agent && *q == p) {
                                cell::AGENT
                            } else if p == own_goal {
                                cell::OWN_GOAL
                            } else if self.tasks.iter().any(|t| t.goal == p) {
                                cell::OTHER_GOAL
                            } else {
                                cell::EMPTY
                            }
                        }
                        _ => cell::WALL,
                    })
                    .collect()
            })
            .collect();
        LocalObservation {
            grid: grid_codes,
            pos: centre,
            goal: own_goal,
        }
    }

    /// Actions that move into a free, currently unoccupied cell, plus stay.
    pub fn action_mask(&self, agent: usize) -> Vec<Action> {
        let here = self.positions[agent];
        Action::ALL
            .into_iter()
            .filter(|a| match a {
                Action::Stay => true,
                _ => match a.target(here) {
                    Some(q) => self.grid().is_free(q) && !self.positions.contains(&q),
                    None => false,
                },
            })
            .collect()
    }
}

fn pairwise_distinct(positions: &[Position]) -> bool {
    let mut seen = std::collections::HashSet::new();
    positions.iter().all(|p| seen.insert(*p))
}

/// Per-agent returns and their sum over agents.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeReward {
    pub per_agent: Vec<f64>,
    pub total: f64,
}

pub fn episode_reward(trace: &[TraceRecord]) -> EpisodeReward {
    let n = trace.first().map_or(0, |r| r.rewards.len());
    let mut per_agent = vec![0.0; n];
    for record in trace {
        for (acc, r) in per_agent.iter_mut().zip(&record.rewards) {
            *acc += r;
        }
    }
    let total = per_agent.iter().sum();
    EpisodeReward { per_agent, total }
}

/// Replay planned paths as a joint-action sequence: the step from `t` to
/// `t + 1` uses each agent's move between its cells at those times.
pub fn actions_from_paths(paths: &[Vec<Position>]) -> Option<Vec<JointAction>> {
    let horizon = paths.iter().map(|p| p.len().saturating_sub(1)).max().unwrap_or(0);
    (0..horizon)
        .map(|t| {
            paths
                .iter()
                .map(|p| {
                    let from = crate::grid::position_at(p, t)?;
                    let to = crate::grid::position_at(p, t + 1)?;
                    Action::between(from, to)
                })
                .collect::<Option<Vec<_>>>()
                .map(JointAction)
        })
        .collect()
}
