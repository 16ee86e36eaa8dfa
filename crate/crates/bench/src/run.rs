use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use mapf_core::deadlock::DeadlockMonitor;
use mapf_core::episode::{actions_from_paths, episode_reward, EpisodeConfig, EpisodeState};
use mapf_core::grid::{apply_action, arrival_time, position_at, GridLayout, JointAction, Position};
use mapf_core::layouts::{sample_tasks, TaskSet};
use mapf_core::rng_from_seed;
use mapf_core::solvers::{
    random_policy, solve_cbs_with, solve_ma_astar_with, CbsConfig, MaAstarConfig, SolveStatus, Solution,
    SolverBudget,
};

use crate::error::BenchError;
use crate::external::ExternalPolicy;
use crate::heatmap::HeatMap;
use crate::record::{RunRecord, RunStatus};
use crate::spec::{Algorithm, BenchmarkSpec};
use crate::summary::{summarize, Summary};

/// Stream of the policy RNG, kept apart from the task-sampling stream so
/// both can share one seed.
const POLICY_STREAM: u64 = 1;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub record: RunRecord,
    /// Joint positions at t = 0..=T_end, for successful runs.
    pub positions: Option<Vec<Vec<Position>>>,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    /// Instance-major, then in the spec's algorithm order.
    pub records: Vec<RunRecord>,
    pub summaries: Vec<Summary>,
    /// One map per algorithm over its successful runs.
    pub heatmaps: Vec<(Algorithm, HeatMap)>,
}

impl BenchReport {
    pub fn summary(&self, algorithm: Algorithm) -> Option<&Summary> {
        self.summaries.iter().find(|s| s.algorithm == algorithm)
    }

    pub fn heatmap(&self, algorithm: Algorithm) -> Option<&HeatMap> {
        self.heatmaps.iter().find(|(a, _)| *a == algorithm).map(|(_, m)| m)
    }

    /// Heat map over every algorithm's successful runs.
    pub fn combined_heatmap(&self, grid: &GridLayout) -> Result<HeatMap, BenchError> {
        let mut map = HeatMap::new(grid);
        for (_, m) in &self.heatmaps {
            map.merge(m)?;
        }
        Ok(map)
    }
}

pub fn instance_tasks(spec: &BenchmarkSpec, instance: usize) -> Result<TaskSet, BenchError> {
    match &spec.fixed_tasks {
        Some(tasks) => Ok(tasks.clone()),
        None => Ok(sample_tasks(&spec.grid, spec.n_agents, &mut rng_from_seed(spec.seed_for(instance)))?),
    }
}

/// Every algorithm of the spec on one instance.
pub fn run_instance(spec: &BenchmarkSpec, instance: usize) -> Result<Vec<RunOutcome>, BenchError> {
    let tasks = instance_tasks(spec, instance)?;
    spec.algorithms
        .iter()
        .map(|&algorithm| match algorithm {
            Algorithm::MaAstar | Algorithm::Cbs => run_planner(spec, algorithm, instance, &tasks),
            Algorithm::Random | Algorithm::External => run_policy(spec, algorithm, instance, &tasks),
        })
        .collect()
}

pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<BenchReport, BenchError> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| BenchError::Config(e.to_string()))?;
    let per_instance: Vec<Vec<RunOutcome>> = pool.install(|| {
        (0..spec.instances)
            .into_par_iter()
            .map(|i| run_instance(spec, i))
            .collect::<Result<_, _>>()
    })?;
    let outcomes: Vec<RunOutcome> = per_instance.into_iter().flatten().collect();
    let records: Vec<RunRecord> = outcomes.iter().map(|o| o.record.clone()).collect();
    let mut heatmaps = Vec::new();
    for &algorithm in &spec.algorithms {
        let mut map = HeatMap::new(&spec.grid);
        for o in outcomes.iter().filter(|o| o.record.algorithm == algorithm) {
            if let Some(positions) = &o.positions {
                map.add_episode(&spec.grid, positions)?;
            }
        }
        heatmaps.push((algorithm, map));
    }
    let summaries = spec.algorithms.iter().map(|&a| summarize(a, &records)).collect();
    Ok(BenchReport {
        records,
        summaries,
        heatmaps,
    })
}

fn solve(spec: &BenchmarkSpec, algorithm: Algorithm, tasks: &TaskSet) -> Result<Solution, BenchError> {
    let budget = SolverBudget {
        horizon: spec.t_max,
        ..spec.budget
    };
    let solution = match algorithm {
        Algorithm::MaAstar => {
            let config = MaAstarConfig {
                model: spec.collision,
                ..MaAstarConfig::default()
            };
            solve_ma_astar_with(&spec.grid, tasks, &budget, &config)?
        }
        Algorithm::Cbs => solve_cbs_with(&spec.grid, tasks, &budget, &CbsConfig { model: spec.collision })?,
        other => return Err(BenchError::Config(format!("{other} is not a planner"))),
    };
    Ok(solution)
}

/// Replay a solved plan through the episode engine under the model it was
/// planned for. The plan must run collision-free and terminate exactly at
/// its makespan with every agent earning the full reward.
pub fn replay_solution(
    grid: &Arc<GridLayout>,
    tasks: &TaskSet,
    solution: &Solution,
    t_max: usize,
    monitor: &mut DeadlockMonitor,
) -> Result<EpisodeState, String> {
    let paths = &solution.paths;
    if paths.len() != tasks.len() {
        return Err(format!("{} paths for {} agents", paths.len(), tasks.len()));
    }
    for (i, (path, task)) in paths.iter().zip(tasks.iter()).enumerate() {
        if path.first() != Some(&task.start) || path.last() != Some(&task.goal) {
            return Err(format!("agent {i} path does not run from its start to its goal"));
        }
    }
    let steps = actions_from_paths(paths).ok_or("paths contain a non-adjacent move")?;
    let mut config = EpisodeConfig::with_tasks(Arc::clone(grid), tasks.clone());
    config.collision = solution.model;
    config.t_max = t_max.max(solution.makespan);
    let mut state = EpisodeState::reset(config, 0).map_err(|e| e.to_string())?;
    for (t, joint) in steps.iter().enumerate() {
        let intents: Vec<Position> = paths.iter().map(|p| position_at(p, t + 1).expect("non-empty")).collect();
        monitor.observe_state(&state, &intents);
        let result = state.step(joint).map_err(|e| e.to_string())?;
        if !result.info.collisions.is_empty() {
            return Err(format!("collision at t={} for agents {:?}", t + 1, result.info.collisions));
        }
    }
    if !state.terminated() || state.t() != solution.makespan {
        return Err(format!(
            "engine finished at t={} (terminated={}), plan makespan {}",
            state.t(),
            state.terminated(),
            solution.makespan
        ));
    }
    let reward = episode_reward(state.trace()).total;
    let expected = 1.5 * tasks.len() as f64;
    if (reward - expected).abs() > 1e-9 {
        return Err(format!("episode reward {reward}, expected {expected}"));
    }
    Ok(state)
}

fn run_planner(
    spec: &BenchmarkSpec,
    algorithm: Algorithm,
    instance: usize,
    tasks: &TaskSet,
) -> Result<RunOutcome, BenchError> {
    let seed = spec.seed_for(instance);
    let solution = solve(spec, algorithm, tasks)?;
    let status = match solution.status {
        SolveStatus::Solved => RunStatus::Success,
        SolveStatus::Timeout => RunStatus::Timeout,
        SolveStatus::Infeasible => RunStatus::Infeasible,
    };
    let mut record = RunRecord {
        instance,
        seed,
        algorithm,
        status,
        timesteps: None,
        sum_of_costs: None,
        wall_ms: solution.stats.wall_ms,
        collisions: 0,
        deadlock: false,
    };
    if !solution.is_solved() {
        return Ok(RunOutcome {
            record,
            positions: None,
        });
    }
    let mut monitor = DeadlockMonitor::new(spec.deadlock_window);
    let state =
        replay_solution(&spec.grid, tasks, &solution, spec.t_max, &mut monitor).map_err(|reason| BenchError::Replay {
            instance,
            algorithm: algorithm.to_string(),
            reason,
        })?;
    record.timesteps = Some(solution.makespan);
    record.sum_of_costs = Some(solution.sum_of_costs);
    record.deadlock = monitor.detected();
    Ok(RunOutcome {
        record,
        positions: Some(joint_positions(&state)),
    })
}

fn joint_positions(state: &EpisodeState) -> Vec<Vec<Position>> {
    std::iter::once(state.tasks().starts())
        .chain(state.trace().iter().map(|r| r.positions.clone()))
        .collect()
}

fn run_policy(
    spec: &BenchmarkSpec,
    algorithm: Algorithm,
    instance: usize,
    tasks: &TaskSet,
) -> Result<RunOutcome, BenchError> {
    let seed = spec.seed_for(instance);
    let started = Instant::now();
    let mut config = EpisodeConfig::with_tasks(Arc::clone(&spec.grid), tasks.clone());
    config.collision = spec.collision;
    config.t_max = spec.t_max;
    config.action_mask = spec.action_mask;
    let mut state = EpisodeState::reset(config, seed)?;
    let mut rng = rng_from_seed(seed);
    rng.set_stream(POLICY_STREAM);
    let mut external = match algorithm {
        Algorithm::External => {
            let cmd = spec.policy_cmd.as_deref().ok_or_else(|| BenchError::Policy("no command".into()))?;
            Some(ExternalPolicy::spawn(cmd)?)
        }
        _ => None,
    };
    let mut monitor = DeadlockMonitor::new(spec.deadlock_window);
    while !state.is_finished() {
        let joint: JointAction = match external.as_mut() {
            Some(policy) => policy.act(&state)?,
            None => random_policy(&state, &mut rng),
        };
        let intents: Vec<Position> = state
            .positions()
            .iter()
            .zip(&joint.0)
            .map(|(&p, &a)| apply_action(p, a, state.grid()).position())
            .collect();
        monitor.observe_state(&state, &intents);
        state.step(&joint)?;
    }
    if let Some(policy) = external {
        policy.finish()?;
    }
    let success = state.terminated();
    let positions = joint_positions(&state);
    let sum_of_costs = success.then(|| {
        (0..state.n_agents())
            .map(|i| arrival_time(&positions.iter().map(|joint| joint[i]).collect::<Vec<_>>()))
            .sum()
    });
    let record = RunRecord {
        instance,
        seed,
        algorithm,
        status: if success { RunStatus::Success } else { RunStatus::Truncated },
        timesteps: success.then(|| state.t()),
        sum_of_costs,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
        collisions: state.trace().iter().map(|r| r.collisions.len()).sum(),
        deadlock: monitor.detected(),
    };
    Ok(RunOutcome {
        record,
        positions: success.then_some(positions),
    })
}
