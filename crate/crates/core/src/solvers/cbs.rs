use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use crate::error::SolverError;
use crate::grid::{arrival_time, position_at, CollisionModel, GridLayout, Position};
use crate::layouts::TaskSet;

use super::low_level::{low_level_search, AvoidTable, Constraint};
use super::{check_tasks, goals_reachable, Deadline, SolveStatus, Solution, SolverBudget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CbsConfig {
    /// `Standard` resolves vertex and swap conflicts only; `Strict` also
    /// resolves following moves.
    pub model: CollisionModel,
}

impl CbsConfig {
    pub fn standard() -> Self {
        CbsConfig {
            model: CollisionModel::Standard,
        }
    }
}

/// Conflicts examined per expansion when choosing which one to split on.
const CONFLICT_SAMPLE: usize = 8;

struct CtNode {
    constraints: Vec<Constraint>,
    paths: Vec<Vec<Position>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Conflict {
    Vertex { agents: Vec<usize>, cell: Position, t: usize },
    /// Agents swap cells between `t - 1` and `t`.
    Swap { agents: [usize; 2], t: usize },
    /// `agents[0]` moves at `t` into the cell `agents[1]` held at `t - 1`.
    Following { agents: [usize; 2], cell: Position, t: usize },
}

/// Up to `limit` conflicts in time order.
fn find_conflicts(paths: &[Vec<Position>], model: CollisionModel, limit: usize) -> Vec<Conflict> {
    let n = paths.len();
    let horizon = paths.iter().map(|p| p.len()).max().unwrap_or(0);
    let at = |i: usize, t: usize| position_at(&paths[i], t).expect("non-empty path");
    let mut found = Vec::new();
    for t in 0..horizon {
        let mut cells: BTreeMap<Position, Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            cells.entry(at(i, t)).or_default().push(i);
        }
        let mut vertex: Vec<(Position, Vec<usize>)> = cells.into_iter().filter(|(_, a)| a.len() > 1).collect();
        vertex.sort_by(|a, b| a.1.cmp(&b.1));
        found.extend(vertex.into_iter().map(|(cell, agents)| Conflict::Vertex { agents, cell, t }));
        if t > 0 {
            for i in 0..n {
                for j in i + 1..n {
                    if at(i, t - 1) == at(j, t) && at(j, t - 1) == at(i, t) && at(i, t) != at(j, t) {
                        found.push(Conflict::Swap { agents: [i, j], t });
                    }
                }
            }
            if model == CollisionModel::Strict {
                for i in 0..n {
                    for j in 0..n {
                        if i != j && at(i, t - 1) != at(i, t) && at(i, t) == at(j, t - 1) {
                            found.push(Conflict::Following {
                                agents: [i, j],
                                cell: at(i, t),
                                t,
                            });
                        }
                    }
                }
            }
        }
        if found.len() >= limit {
            found.truncate(limit);
            break;
        }
    }
    found
}

/// Number of conflicting (pair, timestep) events, used to break ties
/// between constraint-tree nodes of equal cost.
fn count_conflicts(paths: &[Vec<Position>], model: CollisionModel) -> usize {
    let n = paths.len();
    let horizon = paths.iter().map(|p| p.len()).max().unwrap_or(0);
    let at = |i: usize, t: usize| position_at(&paths[i], t).expect("non-empty path");
    let mut count = 0;
    for t in 0..horizon {
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (at(i, t), at(j, t));
                if a == b {
                    count += 1;
                } else if t > 0 {
                    let (pa, pb) = (at(i, t - 1), at(j, t - 1));
                    let swap = pa == b && pb == a;
                    let follow = model == CollisionModel::Strict && ((pa != a && a == pb) || (pb != b && b == pa));
                    if swap || follow {
                        count += 1;
                    }
                }
            }
        }
    }
    count
}

fn avoid_others(paths: &[Vec<Position>], agent: usize) -> AvoidTable {
    AvoidTable::new(paths.iter().enumerate().filter(|&(i, _)| i != agent).map(|(_, p)| p.as_slice()))
}

fn branch(conflict: &Conflict, paths: &[Vec<Position>]) -> Vec<Constraint> {
    match conflict {
        Conflict::Vertex { agents, cell, t } => agents.iter().map(|&a| Constraint::vertex(a, *cell, *t)).collect(),
        Conflict::Swap { agents, t } => agents
            .iter()
            .map(|&a| {
                let from = position_at(&paths[a], t - 1).expect("non-empty path");
                let to = position_at(&paths[a], *t).expect("non-empty path");
                Constraint::edge(a, from, to, t - 1)
            })
            .collect(),
        Conflict::Following { agents, cell, t } => {
            vec![Constraint::vertex(agents[0], *cell, *t), Constraint::vertex(agents[1], *cell, t - 1)]
        }
    }
}

/// Conflict-based search with the standard conflict model.
pub fn solve_cbs(grid: &GridLayout, tasks: &TaskSet, budget: &SolverBudget) -> Result<Solution, SolverError> {
    solve_cbs_with(grid, tasks, budget, &CbsConfig::standard())
}

/// Best-first search over constraint trees ordered by sum of costs, ties
/// broken by the number of remaining conflicts. Low-level searches prefer
/// paths that collide least with the other agents' current paths; nodes
/// split on cardinal conflicts first and adopt equal-cost detours that
/// remove conflicts without branching.
pub fn solve_cbs_with(
    grid: &GridLayout,
    tasks: &TaskSet,
    budget: &SolverBudget,
    config: &CbsConfig,
) -> Result<Solution, SolverError> {
    budget.validate()?;
    check_tasks(grid, tasks)?;
    let deadline = Deadline::new(budget);
    let model = config.model;
    let fail = |status, expansions| Ok(Solution::failed(status, expansions, deadline.started(), model));
    if !goals_reachable(grid, tasks) {
        return fail(SolveStatus::Infeasible, 0);
    }

    let dists: Vec<Vec<Option<usize>>> = tasks.iter().map(|task| grid.distances_from(task.goal)).collect();
    let mut paths: Vec<Vec<Position>> = Vec::with_capacity(tasks.len());
    for (i, task) in tasks.iter().enumerate() {
        let avoid = AvoidTable::new(paths.iter().map(Vec::as_slice));
        match low_level_search(grid, task.start, task.goal, &[], i, budget.horizon, &dists[i], &avoid) {
            Some(p) => paths.push(p),
            None => return fail(SolveStatus::Infeasible, 0),
        }
    }
    let cost: usize = paths.iter().map(|p| arrival_time(p)).sum();
    let conflicts = count_conflicts(&paths, model);
    let mut nodes = vec![CtNode {
        constraints: Vec::new(),
        paths,
    }];
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    open.push(Reverse((cost, conflicts, seq, 0usize)));
    let mut expansions = 0u64;

    'search: while let Some(Reverse((_, _, _, idx))) = open.pop() {
        if deadline.exhausted(expansions) {
            return fail(SolveStatus::Timeout, expansions);
        }
        let conflicts = find_conflicts(&nodes[idx].paths, model, CONFLICT_SAMPLE);
        if conflicts.is_empty() {
            let paths = std::mem::take(&mut nodes[idx].paths);
            return Ok(Solution::solved(paths, expansions, deadline.started(), model));
        }
        expansions += 1;
        let parent_conflicts = count_conflicts(&nodes[idx].paths, model);

        // Split on a cardinal conflict if there is one, else a
        // semi-cardinal one, else the earliest.
        let mut chosen: Option<(usize, Vec<(Constraint, Option<Vec<Position>>)>)> = None;
        for conflict in &conflicts {
            let node = &nodes[idx];
            let children: Vec<(Constraint, Option<Vec<Position>>)> = branch(conflict, &node.paths)
                .into_iter()
                .map(|constraint| {
                    if node.constraints.contains(&constraint) {
                        return (constraint, None);
                    }
                    let agent = constraint.agent;
                    let mut constraints = node.constraints.clone();
                    constraints.push(constraint);
                    let task = tasks.0[agent];
                    let avoid = avoid_others(&node.paths, agent);
                    let path = low_level_search(
                        grid,
                        task.start,
                        task.goal,
                        &constraints,
                        agent,
                        budget.horizon,
                        &dists[agent],
                        &avoid,
                    );
                    (constraint, path)
                })
                .collect();
            let mut increased = 0;
            for (constraint, path) in &children {
                let old = arrival_time(&node.paths[constraint.agent]);
                match path {
                    Some(p) if arrival_time(p) == old => {
                        // Bypass: an equally cheap path with fewer conflicts
                        // replaces the parent's instead of branching.
                        let mut paths = node.paths.clone();
                        paths[constraint.agent] = p.clone();
                        let conflicts = count_conflicts(&paths, model);
                        if conflicts < parent_conflicts {
                            let cost: usize = paths.iter().map(|p| arrival_time(p)).sum();
                            nodes[idx].paths = paths;
                            seq += 1;
                            open.push(Reverse((cost, conflicts, seq, idx)));
                            continue 'search;
                        }
                    }
                    _ => increased += 1,
                }
            }
            let rank = if increased == children.len() {
                0
            } else if increased > 0 {
                1
            } else {
                2
            };
            if chosen.as_ref().map_or(true, |(r, _)| rank < *r) {
                chosen = Some((rank, children));
            }
            if rank == 0 {
                break;
            }
        }

        let (_, children) = chosen.expect("at least one conflict");
        for (constraint, path) in children {
            let Some(path) = path else { continue };
            let agent = constraint.agent;
            let mut constraints = nodes[idx].constraints.clone();
            constraints.push(constraint);
            let mut paths = nodes[idx].paths.clone();
            paths[agent] = path;
            let cost = paths.iter().map(|p| arrival_time(p)).sum();
            let conflicts = count_conflicts(&paths, model);
            nodes.push(CtNode { constraints, paths });
            seq += 1;
            open.push(Reverse((cost, conflicts, seq, nodes.len() - 1)));
        }
        // Parents are never revisited.
        nodes[idx].paths = Vec::new();
        nodes[idx].constraints = Vec::new();
    }
    fail(SolveStatus::Infeasible, expansions)
}
