use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};

use crate::error::SolverError;
use crate::grid::{manhattan, CollisionModel, GridLayout, Position};
use crate::layouts::TaskSet;

use super::{check_tasks, goals_reachable, Deadline, SolveStatus, Solution, SolverBudget};

/// Stored joint states beyond which the search gives up as a timeout, to
/// keep memory bounded.
pub const MAX_STORED_STATES: usize = 25_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Heuristic {
    /// Largest per-agent Manhattan distance; admissible for makespan.
    #[default]
    MaxManhattan,
    /// Sum of per-agent Manhattan distances.
    SumManhattan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaAstarConfig {
    pub heuristic: Heuristic,
    pub model: CollisionModel,
    pub max_stored_states: usize,
}

impl Default for MaAstarConfig {
    fn default() -> Self {
        MaAstarConfig {
            heuristic: Heuristic::MaxManhattan,
            model: CollisionModel::Standard,
            max_stored_states: MAX_STORED_STATES,
        }
    }
}

/// Joint positions packed as cell indices, `bits` bits per agent.
struct Packer {
    bits: u32,
    n: usize,
}

impl Packer {
    fn new(cells: usize, n: usize) -> Result<Self, SolverError> {
        let bits = usize::BITS - (cells.max(2) - 1).leading_zeros();
        if bits as usize * n > 128 {
            return Err(SolverError::Tasks(format!(
                "{n} agents on {cells} cells exceed the joint-state encoding"
            )));
        }
        Ok(Packer { bits, n })
    }

    fn pack(&self, cells: &[u32]) -> u128 {
        cells
            .iter()
            .enumerate()
            .fold(0u128, |k, (i, &c)| k | (u128::from(c) << (i as u32 * self.bits)))
    }

    fn unpack(&self, key: u128, out: &mut Vec<u32>) {
        let mask = (1u128 << self.bits) - 1;
        out.clear();
        out.extend((0..self.n).map(|i| ((key >> (i as u32 * self.bits)) & mask) as u32));
    }
}

/// Per-cell move lists (stay first) and Manhattan distances to each goal.
pub(crate) struct JointSpace {
    pub(crate) moves: Vec<Vec<u32>>,
    pub(crate) dist: Vec<Vec<u32>>,
}

impl JointSpace {
    pub(crate) fn new(grid: &GridLayout, goals: &[Position]) -> Self {
        let moves = (0..grid.cell_count())
            .map(|i| {
                let p = grid.position(i);
                if !grid.is_free(p) {
                    return Vec::new();
                }
                std::iter::once(i as u32)
                    .chain(grid.neighbors(p).map(|q| grid.index(q) as u32))
                    .collect()
            })
            .collect();
        let dist = goals
            .iter()
            .map(|&g| {
                (0..grid.cell_count())
                    .map(|i| manhattan(grid.position(i), g) as u32)
                    .collect()
            })
            .collect();
        JointSpace { moves, dist }
    }

    /// Every legal joint successor of `cur`: no two agents on one cell, no
    /// swaps, and under the strict model no move into any cell currently
    /// held by another agent. `frozen` agents must stay.
    pub(crate) fn successors(
        &self,
        cur: &[u32],
        frozen: &[bool],
        model: CollisionModel,
        mut visit: impl FnMut(&[u32]),
    ) {
        let mut next = vec![0u32; cur.len()];
        self.extend(cur, frozen, model, 0, &mut next, &mut visit);
    }

    fn extend(
        &self,
        cur: &[u32],
        frozen: &[bool],
        model: CollisionModel,
        k: usize,
        next: &mut Vec<u32>,
        visit: &mut impl FnMut(&[u32]),
    ) {
        if k == cur.len() {
            visit(next);
            return;
        }
        let options: &[u32] = if frozen[k] {
            std::slice::from_ref(&cur[k])
        } else {
            &self.moves[cur[k] as usize]
        };
        'candidates: for &c in options {
            if model == CollisionModel::Strict && c != cur[k] && cur.iter().enumerate().any(|(j, &o)| j != k && o == c) {
                continue;
            }
            for j in 0..k {
                if next[j] == c || (next[j] == cur[k] && cur[j] == c) {
                    continue 'candidates;
                }
            }
            next[k] = c;
            self.extend(cur, frozen, model, k + 1, next, visit);
        }
    }
}

/// Multi-agent A* over joint positions with the default configuration.
pub fn solve_ma_astar(grid: &GridLayout, tasks: &TaskSet, budget: &SolverBudget) -> Result<Solution, SolverError> {
    solve_ma_astar_with(grid, tasks, budget, &MaAstarConfig::default())
}

pub fn solve_ma_astar_with(
    grid: &GridLayout,
    tasks: &TaskSet,
    budget: &SolverBudget,
    config: &MaAstarConfig,
) -> Result<Solution, SolverError> {
    budget.validate()?;
    check_tasks(grid, tasks)?;
    let deadline = Deadline::new(budget);
    let model = config.model;
    let n = tasks.len();
    let packer = Packer::new(grid.cell_count(), n)?;
    if !goals_reachable(grid, tasks) {
        return Ok(Solution::failed(SolveStatus::Infeasible, 0, deadline.started(), model));
    }
    let space = JointSpace::new(grid, &tasks.goals());
    let goal: Vec<u32> = tasks.goals().iter().map(|&g| grid.index(g) as u32).collect();
    let goal_key = packer.pack(&goal);
    let heuristic = |cells: &[u32]| -> u32 {
        let per_agent = cells.iter().enumerate().map(|(i, &c)| space.dist[i][c as usize]);
        match config.heuristic {
            Heuristic::MaxManhattan => per_agent.max().unwrap_or(0),
            Heuristic::SumManhattan => per_agent.sum(),
        }
    };

    // node arena: (key, parent, g)
    let start: Vec<u32> = tasks.starts().iter().map(|&s| grid.index(s) as u32).collect();
    let start_key = packer.pack(&start);
    let mut arena: Vec<(u128, u32, u16)> = vec![(start_key, u32::MAX, 0)];
    let mut best: HashMap<u128, (u16, bool)> = HashMap::new();
    best.insert(start_key, (0, false));
    let mut open = BinaryHeap::new();
    let h0 = heuristic(&start);
    open.push(Reverse((h0, h0, 0u64, 0u32)));
    let mut seq = 0u64;
    let mut expansions = 0u64;
    let frozen = vec![false; n];
    let mut cur = Vec::with_capacity(n);
    let horizon = budget.horizon.min(u16::MAX as usize) as u16;

    while let Some(Reverse((_, _, _, idx))) = open.pop() {
        let (key, _, g) = arena[idx as usize];
        match best.get_mut(&key) {
            Some((b, closed)) if !*closed && *b == g => *closed = true,
            _ => continue,
        }
        if key == goal_key {
            return Ok(Solution::solved(
                reconstruct(&arena, idx, &packer, grid),
                expansions,
                deadline.started(),
                model,
            ));
        }
        if deadline.exhausted(expansions) || arena.len() >= config.max_stored_states {
            return Ok(Solution::failed(SolveStatus::Timeout, expansions, deadline.started(), model));
        }
        expansions += 1;
        if g >= horizon {
            continue;
        }
        packer.unpack(key, &mut cur);
        let ng = g + 1;
        space.successors(&cur, &frozen, model, |next| {
            let h = heuristic(next);
            if u32::from(ng) + h > u32::from(horizon) {
                return;
            }
            let nk = packer.pack(next);
            match best.entry(nk) {
                Entry::Occupied(mut e) => {
                    let (b, closed) = *e.get();
                    if closed || b <= ng {
                        return;
                    }
                    e.insert((ng, false));
                }
                Entry::Vacant(e) => {
                    e.insert((ng, false));
                }
            }
            arena.push((nk, idx, ng));
            seq += 1;
            open.push(Reverse((u32::from(ng) + h, h, seq, (arena.len() - 1) as u32)));
        });
    }
    Ok(Solution::failed(SolveStatus::Infeasible, expansions, deadline.started(), model))
}

fn reconstruct(arena: &[(u128, u32, u16)], mut idx: u32, packer: &Packer, grid: &GridLayout) -> Vec<Vec<Position>> {
    let mut keys = Vec::new();
    while idx != u32::MAX {
        let (key, parent, _) = arena[idx as usize];
        keys.push(key);
        idx = parent;
    }
    keys.reverse();
    let mut paths = vec![Vec::with_capacity(keys.len()); packer.n];
    let mut cells = Vec::new();
    for key in keys {
        packer.unpack(key, &mut cells);
        for (path, &c) in paths.iter_mut().zip(&cells) {
            path.push(grid.position(c as usize));
        }
    }
    paths
}
