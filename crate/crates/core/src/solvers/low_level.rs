use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::grid::{GridLayout, Position};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ConstraintKind {
    /// The agent may not occupy `cell` at time `t`.
    Vertex { cell: Position, t: usize },
    /// The agent may not move from `from` at time `t` to `to` at `t + 1`.
    Edge { from: Position, to: Position, t: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Constraint {
    pub agent: usize,
    #[serde(flatten)]
    pub kind: ConstraintKind,
}

impl Constraint {
    pub fn vertex(agent: usize, cell: Position, t: usize) -> Self {
        Constraint {
            agent,
            kind: ConstraintKind::Vertex { cell, t },
        }
    }

    pub fn edge(agent: usize, from: Position, to: Position, t: usize) -> Self {
        Constraint {
            agent,
            kind: ConstraintKind::Edge { from, to, t },
        }
    }

    fn latest_time(&self) -> usize {
        match self.kind {
            ConstraintKind::Vertex { t, .. } => t,
            ConstraintKind::Edge { t, .. } => t + 1,
        }
    }
}

/// Space-time A* for one agent under the constraints that name it.
///
/// Returns the path from `start` (time 0) to the earliest time the agent can
/// reach `goal` and stay there without violating any of its constraints, or
/// `None` if that is impossible within `horizon` steps.
pub fn low_level_astar(
    grid: &GridLayout,
    start: Position,
    goal: Position,
    constraints: &[Constraint],
    agent: usize,
    horizon: usize,
) -> Option<Vec<Position>> {
    let dist = grid.distances_from(goal);
    low_level_search(grid, start, goal, constraints, agent, horizon, &dist, &AvoidTable::default())
}

/// Other agents' current paths. Among shortest paths the search prefers the
/// one with the fewest vertex and swap conflicts against these.
#[derive(Debug, Default)]
pub(crate) struct AvoidTable {
    vertex: HashMap<(Position, usize), u32>,
    edge: HashMap<(Position, Position, usize), u32>,
    /// Cells occupied from the given time onward by an agent parked on its goal.
    parked: HashMap<Position, Vec<usize>>,
    horizon: usize,
}

impl AvoidTable {
    pub(crate) fn new<'a>(paths: impl IntoIterator<Item = &'a [Position]>) -> Self {
        let mut table = AvoidTable::default();
        for path in paths {
            let Some(&last) = path.last() else { continue };
            for t in 0..path.len() {
                *table.vertex.entry((path[t], t)).or_default() += 1;
                if t > 0 {
                    *table.edge.entry((path[t - 1], path[t], t - 1)).or_default() += 1;
                }
            }
            table.parked.entry(last).or_default().push(path.len());
            table.horizon = table.horizon.max(path.len());
        }
        table
    }

    fn is_empty(&self) -> bool {
        self.horizon == 0
    }

    /// Conflicts incurred by moving `from -> to` between `t` and `t + 1`.
    fn cost(&self, from: Position, to: Position, t: usize) -> u32 {
        if self.is_empty() {
            return 0;
        }
        let mut c = self.vertex.get(&(to, t + 1)).copied().unwrap_or(0);
        if let Some(since) = self.parked.get(&to) {
            c += since.iter().filter(|&&s| t + 1 >= s).count() as u32;
        }
        if from != to {
            c += self.edge.get(&(to, from, t)).copied().unwrap_or(0);
        }
        c
    }
}

/// Lexicographic (time, conflicts) A* with a true-distance heuristic.
#[allow(clippy::too_many_arguments)]
pub(crate) fn low_level_search(
    grid: &GridLayout,
    start: Position,
    goal: Position,
    constraints: &[Constraint],
    agent: usize,
    horizon: usize,
    dist: &[Option<usize>],
    avoid: &AvoidTable,
) -> Option<Vec<Position>> {
    if !grid.is_free(start) || !grid.is_free(goal) {
        return None;
    }
    let h = |p: Position| dist[grid.index(p)];
    match h(start) {
        Some(d) if d <= horizon => {}
        _ => return None,
    }
    let mine: Vec<&Constraint> = constraints.iter().filter(|c| c.agent == agent).collect();
    let mut vertex: HashSet<(Position, usize)> = HashSet::new();
    let mut edge: HashSet<(Position, Position, usize)> = HashSet::new();
    let mut goal_blocked_until: Option<usize> = None;
    for c in &mine {
        match c.kind {
            ConstraintKind::Vertex { cell, t } => {
                vertex.insert((cell, t));
                if cell == goal {
                    goal_blocked_until = Some(goal_blocked_until.map_or(t, |b| b.max(t)));
                }
            }
            ConstraintKind::Edge { from, to, t } => {
                edge.insert((from, to, t));
            }
        }
    }
    // Past this time neither the constraints nor the avoid table
    // distinguish timesteps.
    let settle = mine
        .iter()
        .map(|c| c.latest_time() + 1)
        .max()
        .unwrap_or(0)
        .max(avoid.horizon);
    if vertex.contains(&(start, 0)) {
        return None;
    }

    let key = |cell: Position, t: usize| (cell, t.min(settle));
    // (cell, time, conflicts, parent)
    let mut nodes: Vec<(Position, usize, u32, usize)> = vec![(start, 0, 0, usize::MAX)];
    let mut best: HashMap<(Position, usize), (usize, u32)> = HashMap::new();
    let mut closed: HashSet<(Position, usize)> = HashSet::new();
    best.insert(key(start, 0), (0, 0));
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    let h0 = h(start).unwrap_or(0);
    open.push(Reverse((h0, 0u32, h0, seq, 0usize)));

    while let Some(Reverse((_, _, _, _, idx))) = open.pop() {
        let (cell, t, conflicts, _) = nodes[idx];
        if !closed.insert(key(cell, t)) {
            continue;
        }
        if cell == goal && goal_blocked_until.map_or(true, |b| t > b) {
            let mut path = Vec::with_capacity(t + 1);
            let mut cur = idx;
            while cur != usize::MAX {
                path.push(nodes[cur].0);
                cur = nodes[cur].3;
            }
            path.reverse();
            return Some(path);
        }
        if t >= horizon {
            continue;
        }
        let next_t = t + 1;
        for next in std::iter::once(cell).chain(grid.neighbors(cell)) {
            if vertex.contains(&(next, next_t)) || edge.contains(&(cell, next, t)) {
                continue;
            }
            let Some(hn) = h(next) else { continue };
            if next_t + hn > horizon {
                continue;
            }
            let k = key(next, next_t);
            let c = conflicts + avoid.cost(cell, next, t);
            if closed.contains(&k) || best.get(&k).is_some_and(|&b| b <= (next_t, c)) {
                continue;
            }
            best.insert(k, (next_t, c));
            nodes.push((next, next_t, c, idx));
            seq += 1;
            open.push(Reverse((next_t + hn, c, hn, seq, nodes.len() - 1)));
        }
    }
    None
}
