use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use crate::error::SolverError;
use crate::grid::{CollisionModel, GridLayout, Position};
use crate::layouts::TaskSet;

use super::check_tasks;
use super::ma_astar::JointSpace;

/// Largest joint state space (free cells to the power of agents) the oracle
/// will enumerate.
pub const DEFAULT_ORACLE_CAP: u128 = 5_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleOptimum {
    pub makespan: usize,
    /// A makespan-optimal plan, one path per agent, all of equal length.
    pub witness: Vec<Vec<Position>>,
    pub sum_of_costs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleOutcome {
    Solved(OracleOptimum),
    Infeasible,
}

impl OracleOutcome {
    pub fn optimum(&self) -> Option<&OracleOptimum> {
        match self {
            OracleOutcome::Solved(o) => Some(o),
            OracleOutcome::Infeasible => None,
        }
    }
}

fn pack(cells: &[u32]) -> u128 {
    cells.iter().enumerate().fold(0, |k, (i, &c)| k | (u128::from(c) << (16 * i)))
}

fn unpack(key: u128, n: usize) -> Vec<u32> {
    (0..n).map(|i| ((key >> (16 * i)) & 0xffff) as u32).collect()
}

/// Exhaustive search over joint positions under vertex and swap conflicts.
/// Makespan comes from breadth-first search; sum of costs from a uniform
/// cost search whose states also record which agents have settled for good
/// on their goals, each step costing one per unsettled agent.
pub fn joint_bfs_oracle(grid: &GridLayout, tasks: &TaskSet, cap: u128) -> Result<OracleOutcome, SolverError> {
    check_tasks(grid, tasks)?;
    let n = tasks.len();
    let estimate = (grid.free_count() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if estimate > cap || n > 8 {
        return Err(SolverError::OracleCap { estimate, cap });
    }
    let space = JointSpace::new(grid, &tasks.goals());
    let model = CollisionModel::Standard;
    let start: Vec<u32> = tasks.starts().iter().map(|&s| grid.index(s) as u32).collect();
    let goal: Vec<u32> = tasks.goals().iter().map(|&g| grid.index(g) as u32).collect();
    let (start_key, goal_key) = (pack(&start), pack(&goal));

    let free = vec![false; n];
    let mut parent: HashMap<u128, u128> = HashMap::new();
    parent.insert(start_key, start_key);
    let mut queue = VecDeque::from([start_key]);
    let mut found = start_key == goal_key;
    while let Some(key) = queue.pop_front() {
        if found {
            break;
        }
        space.successors(&unpack(key, n), &free, model, |next| {
            let nk = pack(next);
            if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(nk) {
                e.insert(key);
                queue.push_back(nk);
                if nk == goal_key {
                    found = true;
                }
            }
        });
    }
    if !found {
        return Ok(OracleOutcome::Infeasible);
    }
    let mut keys = vec![goal_key];
    while *keys.last().expect("non-empty") != start_key {
        keys.push(parent[keys.last().expect("non-empty")]);
    }
    keys.reverse();
    let makespan = keys.len() - 1;
    let mut witness = vec![Vec::with_capacity(keys.len()); n];
    for key in &keys {
        for (path, c) in witness.iter_mut().zip(unpack(*key, n)) {
            path.push(grid.position(c as usize));
        }
    }

    let all_done = (1u32 << n) - 1;
    let mut dist: HashMap<(u128, u32), usize> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert((start_key, 0), 0);
    heap.push(Reverse((0usize, start_key, 0u32)));
    let mut sum_of_costs = None;
    while let Some(Reverse((d, key, mask))) = heap.pop() {
        if dist.get(&(key, mask)).is_some_and(|&b| b < d) {
            continue;
        }
        if mask == all_done {
            sum_of_costs = Some(d);
            break;
        }
        let cells = unpack(key, n);
        let mut relax = |nk: u128, nm: u32, nd: usize, heap: &mut BinaryHeap<_>| {
            if dist.get(&(nk, nm)).map_or(true, |&b| nd < b) {
                dist.insert((nk, nm), nd);
                heap.push(Reverse((nd, nk, nm)));
            }
        };
        for i in 0..n {
            if mask & (1 << i) == 0 && cells[i] == goal[i] {
                relax(key, mask | (1 << i), d, &mut heap);
            }
        }
        let frozen: Vec<bool> = (0..n).map(|i| mask & (1 << i) != 0).collect();
        let step_cost = n - mask.count_ones() as usize;
        let mut succ = Vec::new();
        space.successors(&cells, &frozen, model, |next| succ.push(pack(next)));
        for nk in succ {
            relax(nk, mask, d + step_cost, &mut heap);
        }
    }
    let sum_of_costs = sum_of_costs.expect("a makespan witness implies a settled plan");
    Ok(OracleOutcome::Solved(OracleOptimum {
        makespan,
        witness,
        sum_of_costs,
    }))
}
