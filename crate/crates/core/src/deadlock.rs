//! Resource allocation graphs, the Banker's algorithm and an episode-level
//! deadlock observer that treats grid cells as single-instance resources.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::episode::EpisodeState;
use crate::error::DeadlockError;
use crate::grid::Position;

pub const DEFAULT_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RagNode {
    Process(usize),
    Resource(usize),
}

impl fmt::Display for RagNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RagNode::Process(p) => write!(f, "P{}", p + 1),
            RagNode::Resource(r) => write!(f, "R{}", r + 1),
        }
    }
}

/// Processes, resource types with instance counts, request edges and
/// allocation edges. Allocations are stored as unit counts per
/// (process, resource); requests as counts whose nonzero entries are edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceAllocationGraph {
    instances: Vec<u64>,
    allocation: Vec<Vec<u64>>,
    request: Vec<Vec<u64>>,
}

/// A closed wait cycle alternating process and resource nodes, starting at
/// a process. Each node waits on (or is held by) the next; the last node
/// points back to the first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RagCycle {
    pub nodes: Vec<RagNode>,
    /// True when some resource on the cycle has more than one instance, in
    /// which case the cycle does not by itself prove a deadlock.
    pub potential: bool,
}

impl RagCycle {
    pub fn processes(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                RagNode::Process(p) => Some(*p),
                RagNode::Resource(_) => None,
            })
            .collect()
    }
}

impl fmt::Display for RagCycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in &self.nodes {
            write!(f, "{n} -> ")?;
        }
        match self.nodes.first() {
            Some(first) => write!(f, "{first}")?,
            None => write!(f, "(empty)")?,
        }
        if self.potential {
            write!(f, " (potential)")?;
        }
        Ok(())
    }
}

impl ResourceAllocationGraph {
    pub fn new(n_processes: usize, instances: Vec<u64>) -> Self {
        let m = instances.len();
        ResourceAllocationGraph {
            instances,
            allocation: vec![vec![0; m]; n_processes],
            request: vec![vec![0; m]; n_processes],
        }
    }

    pub fn n_processes(&self) -> usize {
        self.allocation.len()
    }

    pub fn n_resources(&self) -> usize {
        self.instances.len()
    }

    pub fn instances(&self) -> &[u64] {
        &self.instances
    }

    fn check(&self, p: usize, r: usize) -> Result<(), DeadlockError> {
        if p >= self.n_processes() {
            return Err(DeadlockError::UnknownProcess(p));
        }
        if r >= self.n_resources() {
            return Err(DeadlockError::Shape(format!("unknown resource {r}")));
        }
        Ok(())
    }

    /// Add a request edge `P_p -> R_r`. Repeating an existing edge is a no-op.
    pub fn add_request(&mut self, p: usize, r: usize) -> Result<(), DeadlockError> {
        self.check(p, r)?;
        self.request[p][r] = self.request[p][r].max(1);
        Ok(())
    }

    /// Allocate one instance of `R_r` to `P_p`.
    pub fn allocate(&mut self, p: usize, r: usize) -> Result<(), DeadlockError> {
        self.check(p, r)?;
        let used: u64 = self.allocation.iter().map(|row| row[r]).sum();
        if used + 1 > self.instances[r] {
            return Err(DeadlockError::OverAllocated {
                resource: r,
                allocated: used + 1,
                instances: self.instances[r],
            });
        }
        self.allocation[p][r] += 1;
        Ok(())
    }

    pub fn allocation_matrix(&self) -> &[Vec<u64>] {
        &self.allocation
    }

    pub fn request_matrix(&self) -> &[Vec<u64>] {
        &self.request
    }

    /// Free instances per resource type.
    pub fn available(&self) -> Vec<u64> {
        (0..self.n_resources())
            .map(|r| self.instances[r] - self.allocation.iter().map(|row| row[r]).sum::<u64>())
            .collect()
    }

    /// Request edges `P -> R`, one per nonzero request entry.
    pub fn request_edges(&self) -> Vec<(usize, usize)> {
        nonzero(&self.request)
    }

    /// Allocation edges `R -> P`, one per allocated unit.
    pub fn allocation_edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for (p, row) in self.allocation.iter().enumerate() {
            for (r, &k) in row.iter().enumerate() {
                for _ in 0..k {
                    edges.push((r, p));
                }
            }
        }
        edges
    }

    fn successors(&self, node: RagNode) -> Vec<RagNode> {
        match node {
            RagNode::Process(p) => (0..self.n_resources())
                .filter(|&r| self.request[p][r] > 0)
                .map(RagNode::Resource)
                .collect(),
            RagNode::Resource(r) => (0..self.n_processes())
                .filter(|&p| self.allocation[p][r] > 0)
                .map(RagNode::Process)
                .collect(),
        }
    }

    /// First directed cycle found by depth-first search from processes in
    /// ascending order.
    pub fn detect_cycle(&self) -> Option<RagCycle> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            OnStack,
            Done,
        }
        let n = self.n_processes();
        let key = |node: RagNode| match node {
            RagNode::Process(p) => p,
            RagNode::Resource(r) => n + r,
        };
        let mut mark = vec![Mark::New; n + self.n_resources()];
        for start in 0..n {
            if mark[start] != Mark::New {
                continue;
            }
            let mut stack: Vec<(RagNode, Vec<RagNode>, usize)> = Vec::new();
            let root = RagNode::Process(start);
            mark[start] = Mark::OnStack;
            stack.push((root, self.successors(root), 0));
            while let Some((_, succ, idx)) = stack.last_mut() {
                if *idx == succ.len() {
                    let (node, _, _) = stack.pop().expect("non-empty");
                    mark[key(node)] = Mark::Done;
                    continue;
                }
                let next = succ[*idx];
                *idx += 1;
                match mark[key(next)] {
                    Mark::OnStack => {
                        let from = stack.iter().position(|(v, _, _)| *v == next).expect("on stack");
                        let mut nodes: Vec<RagNode> = stack[from..].iter().map(|(v, _, _)| *v).collect();
                        if let RagNode::Resource(_) = nodes[0] {
                            nodes.rotate_left(1);
                        }
                        let potential = nodes.iter().any(|v| match v {
                            RagNode::Resource(r) => self.instances[*r] > 1,
                            RagNode::Process(_) => false,
                        });
                        return Some(RagCycle { nodes, potential });
                    }
                    Mark::New => {
                        mark[key(next)] = Mark::OnStack;
                        stack.push((next, self.successors(next), 0));
                    }
                    Mark::Done => {}
                }
            }
        }
        None
    }

    /// Processes that can never finish: repeatedly let any process whose
    /// pending requests fit into the free instances complete and release
    /// its allocation; whatever remains is deadlocked.
    pub fn deadlocked_processes(&self) -> Vec<usize> {
        let mut work = self.available();
        let mut done = vec![false; self.n_processes()];
        loop {
            let next = (0..self.n_processes())
                .find(|&p| !done[p] && self.request[p].iter().zip(&work).all(|(q, w)| q <= w));
            let Some(p) = next else { break };
            for (w, a) in work.iter_mut().zip(&self.allocation[p]) {
                *w += a;
            }
            done[p] = true;
        }
        (0..self.n_processes()).filter(|&p| !done[p]).collect()
    }
}

fn nonzero(m: &[Vec<u64>]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, row) in m.iter().enumerate() {
        for (j, &k) in row.iter().enumerate() {
            if k > 0 {
                out.push((i, j));
            }
        }
    }
    out
}

fn check_shape(name: &str, m: &[Vec<u64>], rows: usize, cols: usize) -> Result<(), DeadlockError> {
    if m.len() != rows {
        return Err(DeadlockError::Shape(format!("{name} has {} rows, expected {rows}", m.len())));
    }
    if let Some((i, row)) = m.iter().enumerate().find(|(_, row)| row.len() != cols) {
        return Err(DeadlockError::Shape(format!(
            "{name} row {i} has {} columns, expected {cols}",
            row.len()
        )));
    }
    Ok(())
}

/// Build a graph from an allocation matrix, a request matrix and the
/// instance count of each resource type.
pub fn rag_from_matrices(
    allocation: &[Vec<u64>],
    request: &[Vec<u64>],
    instances: &[u64],
) -> Result<ResourceAllocationGraph, DeadlockError> {
    let n = allocation.len();
    let m = instances.len();
    check_shape("allocation", allocation, n, m)?;
    check_shape("request", request, n, m)?;
    for (r, &cap) in instances.iter().enumerate() {
        let used: u64 = allocation.iter().map(|row| row[r]).sum();
        if used > cap {
            return Err(DeadlockError::OverAllocated {
                resource: r,
                allocated: used,
                instances: cap,
            });
        }
    }
    Ok(ResourceAllocationGraph {
        instances: instances.to_vec(),
        allocation: allocation.to_vec(),
        request: request.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BankersState {
    pub available: Vec<u64>,
    pub max: Vec<Vec<u64>>,
    pub allocation: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SafetyResult {
    pub safe: bool,
    /// Completion order when safe.
    pub order: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GrantOutcome {
    Granted(BankersState),
    DeniedUnsafe,
    DeniedInvalid(String),
}

impl BankersState {
    pub fn new(available: Vec<u64>, max: Vec<Vec<u64>>, allocation: Vec<Vec<u64>>) -> Result<Self, DeadlockError> {
        let state = BankersState {
            available,
            max,
            allocation,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn n_processes(&self) -> usize {
        self.max.len()
    }

    pub fn n_resources(&self) -> usize {
        self.available.len()
    }

    pub fn validate(&self) -> Result<(), DeadlockError> {
        let (n, m) = (self.n_processes(), self.n_resources());
        check_shape("max", &self.max, n, m)?;
        check_shape("allocation", &self.allocation, n, m)?;
        for p in 0..n {
            for r in 0..m {
                if self.allocation[p][r] > self.max[p][r] {
                    return Err(DeadlockError::NegativeNeed { process: p, resource: r });
                }
            }
        }
        Ok(())
    }

    pub fn need(&self) -> Vec<Vec<u64>> {
        self.max
            .iter()
            .zip(&self.allocation)
            .map(|(mx, al)| mx.iter().zip(al).map(|(a, b)| a - b).collect())
            .collect()
    }

    /// Total instances per resource type: allocations plus what is free.
    pub fn total(&self) -> Vec<u64> {
        (0..self.n_resources())
            .map(|r| self.available[r] + self.allocation.iter().map(|row| row[r]).sum::<u64>())
            .collect()
    }

    /// The safety check: repeatedly complete the lowest-numbered unfinished
    /// process whose need fits into what is currently available.
    pub fn is_safe(&self) -> Result<SafetyResult, DeadlockError> {
        self.validate()?;
        let need = self.need();
        let mut current = self.available.clone();
        let mut completed = vec![false; self.n_processes()];
        let mut order = Vec::with_capacity(self.n_processes());
        while let Some(p) = (0..self.n_processes())
            .find(|&p| !completed[p] && need[p].iter().zip(&current).all(|(n, c)| n <= c))
        {
            for (c, a) in current.iter_mut().zip(&self.allocation[p]) {
                *c += a;
            }
            completed[p] = true;
            order.push(p);
        }
        let safe = completed.iter().all(|&c| c);
        Ok(SafetyResult {
            safe,
            order: safe.then_some(order),
        })
    }

    /// Decide a request of `req` additional instances by process `p`.
    pub fn grant_request(&self, p: usize, req: &[u64]) -> Result<GrantOutcome, DeadlockError> {
        self.validate()?;
        if p >= self.n_processes() {
            return Err(DeadlockError::UnknownProcess(p));
        }
        if req.len() != self.n_resources() {
            return Err(DeadlockError::Shape(format!(
                "request has {} entries, expected {}",
                req.len(),
                self.n_resources()
            )));
        }
        let need = self.need();
        for r in 0..req.len() {
            if req[r] > need[p][r] {
                return Ok(GrantOutcome::DeniedInvalid(format!(
                    "request for R{} exceeds need ({} > {})",
                    r + 1,
                    req[r],
                    need[p][r]
                )));
            }
            if req[r] > self.available[r] {
                return Ok(GrantOutcome::DeniedInvalid(format!(
                    "request for R{} exceeds available ({} > {})",
                    r + 1,
                    req[r],
                    self.available[r]
                )));
            }
        }
        let mut next = self.clone();
        for r in 0..req.len() {
            next.available[r] -= req[r];
            next.allocation[p][r] += req[r];
        }
        if next.is_safe()?.safe {
            Ok(GrantOutcome::Granted(next))
        } else {
            Ok(GrantOutcome::DeniedUnsafe)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeadlockKind {
    /// Agents wait on each other's cells in a closed cycle.
    Cycle,
    /// Two adjacent agents have blocked each other for the whole window.
    HeadOn,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeadlockReport {
    pub kind: DeadlockKind,
    /// Agents in wait order; each waits on the next, the last on the first.
    pub cycle: Vec<usize>,
    /// Cell held by each agent in `cycle`.
    pub cells: Vec<Position>,
    pub timestep: usize,
}

impl DeadlockReport {
    pub fn agents(&self) -> Vec<usize> {
        let mut a = self.cycle.clone();
        a.sort_unstable();
        a
    }
}

/// Cells as single-instance resources: every agent holds its cell and every
/// agent not yet on its goal requests its intended cell. Reports the first
/// wait cycle.
pub fn detect_wait_cycle(
    positions: &[Position],
    goals: &[Position],
    intents: &[Position],
    timestep: usize,
) -> Option<DeadlockReport> {
    let n = positions.len();
    let mut cell_ids: BTreeMap<Position, usize> = BTreeMap::new();
    for p in positions.iter().chain(intents) {
        let next = cell_ids.len();
        cell_ids.entry(*p).or_insert(next);
    }
    let mut rag = ResourceAllocationGraph::new(n, vec![1; cell_ids.len()]);
    for i in 0..n {
        rag.allocate(i, cell_ids[&positions[i]]).ok()?;
        let finished = positions[i] == goals[i];
        if !finished && intents[i] != positions[i] {
            rag.add_request(i, cell_ids[&intents[i]]).ok()?;
        }
    }
    let cycle = rag.detect_cycle()?.processes();
    let cells = cycle.iter().map(|&i| positions[i]).collect();
    Some(DeadlockReport {
        kind: DeadlockKind::Cycle,
        cycle,
        cells,
        timestep,
    })
}

/// Stateless check against an episode state. Without history it can only
/// see wait cycles; [`DeadlockMonitor`] adds the persistence rule.
pub fn detect_episode_deadlock(state: &EpisodeState, intents: &[Position]) -> Option<DeadlockReport> {
    detect_wait_cycle(state.positions(), &state.tasks().goals(), intents, state.t())
}

/// Episode observer. Reports a wait cycle as soon as it appears, and a
/// head-on block once two adjacent unfinished agents, at least one of them
/// requesting the other's cell, have kept their cells for `window`
/// consecutive observations.
#[derive(Debug, Clone)]
pub struct DeadlockMonitor {
    window: usize,
    last_positions: Option<Vec<Position>>,
    blocked_for: HashMap<(usize, usize), usize>,
    first: Option<DeadlockReport>,
}

impl Default for DeadlockMonitor {
    fn default() -> Self {
        DeadlockMonitor::new(DEFAULT_WINDOW)
    }
}

impl DeadlockMonitor {
    pub fn new(window: usize) -> Self {
        DeadlockMonitor {
            window: window.max(1),
            last_positions: None,
            blocked_for: HashMap::new(),
            first: None,
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// First deadlock seen so far.
    pub fn first_report(&self) -> Option<&DeadlockReport> {
        self.first.as_ref()
    }

    pub fn detected(&self) -> bool {
        self.first.is_some()
    }

    pub fn observe_state(&mut self, state: &EpisodeState, intents: &[Position]) -> Option<DeadlockReport> {
        self.observe(state.positions(), &state.tasks().goals(), intents, state.t())
    }

    pub fn observe(
        &mut self,
        positions: &[Position],
        goals: &[Position],
        intents: &[Position],
        timestep: usize,
    ) -> Option<DeadlockReport> {
        let report = detect_wait_cycle(positions, goals, intents, timestep).or_else(|| {
            let stationary = self.last_positions.as_deref() == Some(positions);
            if !stationary {
                self.blocked_for.clear();
            }
            let mut found = None;
            let mut still = HashMap::new();
            for i in 0..positions.len() {
                for j in i + 1..positions.len() {
                    let unfinished = positions[i] != goals[i] && positions[j] != goals[j];
                    let adjacent = crate::grid::manhattan(positions[i], positions[j]) == 1;
                    let pressing = intents[i] == positions[j] || intents[j] == positions[i];
                    if unfinished && adjacent && pressing {
                        let count = self.blocked_for.get(&(i, j)).copied().unwrap_or(0) + 1;
                        still.insert((i, j), count);
                        if count >= self.window && found.is_none() {
                            found = Some(DeadlockReport {
                                kind: DeadlockKind::HeadOn,
                                cycle: vec![i, j],
                                cells: vec![positions[i], positions[j]],
                                timestep,
                            });
                        }
                    }
                }
            }
            self.blocked_for = still;
            found
        });
        self.last_positions = Some(positions.to_vec());
        if self.first.is_none() {
            self.first = report.clone();
        }
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: usize, y: usize) -> Position {
        Position::new(x, y)
    }

    #[test]
    fn right_graph_cycle() {
        let mut rag = ResourceAllocationGraph::new(3, vec![1, 1, 1]);
        rag.allocate(0, 0).unwrap();
        rag.add_request(0, 1).unwrap();
        rag.allocate(1, 1).unwrap();
        rag.add_request(1, 0).unwrap();
        rag.allocate(2, 2).unwrap();
        rag.add_request(2, 0).unwrap();
        let cycle = rag.detect_cycle().unwrap();
        assert_eq!(
            cycle.nodes,
            vec![
                RagNode::Process(0),
                RagNode::Resource(1),
                RagNode::Process(1),
                RagNode::Resource(0)
            ]
        );
        assert!(!cycle.potential);
        assert_eq!(cycle.to_string(), "P1 -> R2 -> P2 -> R1 -> P1");
        assert_eq!(rag.deadlocked_processes(), vec![0, 1, 2]);
    }

    #[test]
    fn acyclic_graphs() {
        assert!(ResourceAllocationGraph::new(0, vec![]).detect_cycle().is_none());
        let mut chain = ResourceAllocationGraph::new(2, vec![1]);
        chain.add_request(0, 0).unwrap();
        chain.allocate(1, 0).unwrap();
        assert!(chain.detect_cycle().is_none());
        assert!(chain.deadlocked_processes().is_empty());
    }

    #[test]
    fn duplicate_request_and_overallocation() {
        let mut rag = ResourceAllocationGraph::new(2, vec![1]);
        rag.add_request(0, 0).unwrap();
        rag.add_request(0, 0).unwrap();
        assert_eq!(rag.request_edges(), vec![(0, 0)]);
        rag.allocate(1, 0).unwrap();
        assert!(matches!(rag.allocate(0, 0), Err(DeadlockError::OverAllocated { .. })));
        assert!(matches!(rag.add_request(5, 0), Err(DeadlockError::UnknownProcess(5))));
    }

    #[test]
    fn left_matrices_build_left_graph() {
        let c = vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 1, 1]];
        let r = vec![vec![0, 1, 0], vec![1, 0, 0], vec![1, 0, 0]];
        let rag = rag_from_matrices(&c, &r, &[1, 2, 3]).unwrap();
        assert_eq!(rag.allocation_edges(), vec![(0, 0), (1, 1), (1, 2), (2, 2)]);
        assert_eq!(rag.request_edges(), vec![(0, 1), (1, 0), (2, 0)]);
        assert_eq!(rag.available(), vec![0, 0, 2]);
        let cycle = rag.detect_cycle().unwrap();
        assert!(cycle.potential, "R2 has two instances");
        assert_eq!(cycle.processes(), vec![0, 1]);
        assert_eq!(rag.allocation_matrix(), c.as_slice());
        assert_eq!(rag.request_matrix(), r.as_slice());
    }

    #[test]
    fn matrices_capacity_and_shape_errors() {
        assert!(matches!(
            rag_from_matrices(&[vec![2]], &[vec![0]], &[1]),
            Err(DeadlockError::OverAllocated { .. })
        ));
        assert!(matches!(
            rag_from_matrices(&[vec![0, 0]], &[vec![0]], &[1, 1]),
            Err(DeadlockError::Shape(_))
        ));
        let zero = rag_from_matrices(&vec![vec![0; 2]; 2], &vec![vec![0; 2]; 2], &[1, 1]).unwrap();
        assert!(zero.request_edges().is_empty() && zero.allocation_edges().is_empty());
    }

    #[test]
    fn bankers_basic_cases() {
        let all_done = BankersState::new(vec![0, 0], vec![vec![1, 0], vec![0, 1]], vec![vec![1, 0], vec![0, 1]]).unwrap();
        let r = all_done.is_safe().unwrap();
        assert!(r.safe);
        assert_eq!(r.order, Some(vec![0, 1]));

        let single = BankersState::new(vec![2, 1], vec![vec![3, 1]], vec![vec![1, 0]]).unwrap();
        assert!(single.is_safe().unwrap().safe);

        // allocation C_r, need = request matrix, nothing available
        let right = BankersState::new(
            vec![0, 0, 0],
            vec![vec![1, 1, 0], vec![1, 1, 0], vec![1, 0, 1]],
            vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]],
        )
        .unwrap();
        assert_eq!(right.is_safe().unwrap(), SafetyResult { safe: false, order: None });
    }

    #[test]
    fn bankers_textbook_example() {
        let s = BankersState::new(
            vec![3, 3, 2],
            vec![vec![7, 5, 3], vec![3, 2, 2], vec![9, 0, 2], vec![2, 2, 2], vec![4, 3, 3]],
            vec![vec![0, 1, 0], vec![2, 0, 0], vec![3, 0, 2], vec![2, 1, 1], vec![0, 0, 2]],
        )
        .unwrap();
        assert_eq!(s.is_safe().unwrap().order, Some(vec![1, 3, 0, 2, 4]));
        assert_eq!(s.total(), vec![10, 5, 7]);
        match s.grant_request(1, &[1, 0, 2]).unwrap() {
            GrantOutcome::Granted(next) => assert_eq!(next.available, vec![2, 3, 0]),
            other => panic!("expected grant, got {other:?}"),
        }
        assert!(matches!(s.grant_request(4, &[5, 0, 0]).unwrap(), GrantOutcome::DeniedInvalid(_)));
        assert!(matches!(s.grant_request(0, &[4, 0, 0]).unwrap(), GrantOutcome::DeniedInvalid(_)));
        assert_eq!(s.grant_request(4, &[3, 3, 0]).unwrap(), GrantOutcome::DeniedUnsafe);
    }

    #[test]
    fn bankers_invariant_errors() {
        assert!(matches!(
            BankersState::new(vec![1], vec![vec![1]], vec![vec![2]]),
            Err(DeadlockError::NegativeNeed { process: 0, resource: 0 })
        ));
        assert!(matches!(BankersState::new(vec![1], vec![vec![1, 1]], vec![vec![0]]), Err(DeadlockError::Shape(_))));
        let s = BankersState::new(vec![1], vec![vec![1]], vec![vec![0]]).unwrap();
        assert!(matches!(s.grant_request(3, &[0]), Err(DeadlockError::UnknownProcess(3))));
        assert_eq!(s.grant_request(0, &[0]).unwrap(), GrantOutcome::Granted(s.clone()));
    }

    #[test]
    fn bankers_json_form() {
        let s: BankersState =
            serde_json::from_str(r#"{"available":[1,0],"max":[[1,1]],"allocation":[[0,1]]}"#).unwrap();
        assert_eq!(s.need(), vec![vec![1, 0]]);
    }

    #[test]
    fn corridor_head_on_cycle() {
        let positions = [p(0, 1), p(0, 2)];
        let goals = [p(0, 3), p(0, 0)];
        let r = detect_wait_cycle(&positions, &goals, &[p(0, 2), p(0, 1)], 4).unwrap();
        assert_eq!(r.kind, DeadlockKind::Cycle);
        assert_eq!(r.cycle, vec![0, 1]);
        assert_eq!(r.cells, vec![p(0, 1), p(0, 2)]);
        assert_eq!(r.timestep, 4);
    }

    #[test]
    fn ring_rotation_is_a_cycle() {
        let positions = [p(0, 0), p(0, 1), p(1, 1), p(1, 0)];
        let intents = [p(0, 1), p(1, 1), p(1, 0), p(0, 0)];
        let goals = [p(5, 5), p(5, 6), p(5, 7), p(5, 8)];
        let r = detect_wait_cycle(&positions, &goals, &intents, 0).unwrap();
        assert_eq!(r.cycle, vec![0, 1, 2, 3]);
    }

    #[test]
    fn agents_at_goal_never_deadlock() {
        let positions = [p(0, 1), p(0, 2)];
        assert!(detect_wait_cycle(&positions, &positions, &[p(0, 2), p(0, 1)], 0).is_none());
    }

    #[test]
    fn monitor_head_on_needs_window() {
        let mut m = DeadlockMonitor::new(3);
        let positions = [p(0, 1), p(0, 2)];
        let goals = [p(0, 3), p(0, 0)];
        // agent 0 presses against agent 1, which waits
        let intents = [p(0, 2), p(0, 2)];
        assert!(m.observe(&positions, &goals, &intents, 0).is_none());
        assert!(m.observe(&positions, &goals, &intents, 1).is_none());
        let r = m.observe(&positions, &goals, &intents, 2).unwrap();
        assert_eq!(r.kind, DeadlockKind::HeadOn);
        assert_eq!(m.first_report().unwrap().timestep, 2);
    }

    #[test]
    fn monitor_resets_on_movement() {
        let mut m = DeadlockMonitor::new(2);
        let goals = [p(0, 5), p(0, 0)];
        let intents = [p(0, 2), p(0, 2)];
        assert!(m.observe(&[p(0, 1), p(0, 2)], &goals, &intents, 0).is_none());
        assert!(m.observe(&[p(0, 1), p(0, 3)], &goals, &[p(0, 2), p(0, 3)], 1).is_none());
        assert!(m.observe(&[p(0, 2), p(0, 3)], &goals, &[p(0, 3), p(0, 3)], 2).is_none());
        assert!(!m.detected());
    }
}
