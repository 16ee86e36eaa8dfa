//! Grid geometry, the five-action move model, collision detection and the
//! plan conflict taxonomy used throughout the crate.
//!
//! Coordinates follow the row/column convention: `x` is the row index and
//! grows downward, `y` is the column index and grows to the right. "Up"
//! therefore maps `(x, y)` to `(x - 1, y)`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::GridError;

/// A cell coordinate: `x` is the row, `y` the column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Position {
    pub x: usize,
    pub y: usize,
}

impl Position {
    pub const fn new(x: usize, y: usize) -> Self {
        Position { x, y }
    }

    /// Shift by a signed delta, returning `None` on underflow.
    pub fn offset(self, dx: isize, dy: isize) -> Option<Position> {
        let x = self.x.checked_add_signed(dx)?;
        let y = self.y.checked_add_signed(dy)?;
        Some(Position { x, y })
    }
}

impl From<[usize; 2]> for Position {
    fn from([x, y]: [usize; 2]) -> Self {
        Position { x, y }
    }
}

impl From<Position> for [usize; 2] {
    fn from(p: Position) -> Self {
        [p.x, p.y]
    }
}

impl From<(usize, usize)> for Position {
    fn from((x, y): (usize, usize)) -> Self {
        Position { x, y }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

pub fn manhattan(a: Position, b: Position) -> usize {
    a.x.abs_diff(b.x) + a.y.abs_diff(b.y)
}

/// Immutable occupancy grid. Cells are either free or walls.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridLayout {
    name: String,
    rows: usize,
    cols: usize,
    walls: Vec<bool>,
}

impl GridLayout {
    /// Build a layout from a row-major wall mask.
    pub fn new(
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        walls: Vec<bool>,
    ) -> Result<Self, GridError> {
        if rows == 0 || cols == 0 {
            return Err(GridError::EmptyGrid);
        }
        if walls.len() != rows * cols {
            return Err(GridError::CellCount {
                expected: rows * cols,
                got: walls.len(),
            });
        }
        let free = walls.iter().filter(|w| !**w).count();
        if free < 2 {
            return Err(GridError::TooFewFreeCells(free));
        }
        Ok(GridLayout {
            name: name.into(),
            rows,
            cols,
            walls,
        })
    }

    /// Parse the text form: one line per row, `.` free and `#` wall.
    /// Trailing whitespace on a line is ignored, as are blank trailing lines.
    pub fn from_text(name: impl Into<String>, text: &str) -> Result<Self, GridError> {
        let mut lines: Vec<&str> = text.lines().map(str::trim_end).collect();
        while lines.last().is_some_and(|l| l.is_empty()) {
            lines.pop();
        }
        let rows = lines.len();
        if rows == 0 {
            return Err(GridError::EmptyGrid);
        }
        let cols = lines[0].chars().count();
        let mut walls = Vec::with_capacity(rows * cols);
        for (row, line) in lines.iter().enumerate() {
            let width = line.chars().count();
            if width != cols {
                return Err(GridError::Ragged {
                    row,
                    expected: cols,
                    got: width,
                });
            }
            for (col, ch) in line.chars().enumerate() {
                match ch {
                    '.' => walls.push(false),
                    '#' => walls.push(true),
                    other => return Err(GridError::BadCell { row, col, ch: other }),
                }
            }
        }
        GridLayout::new(name, rows, cols, walls)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.rows * (self.cols + 1));
        for x in 0..self.rows {
            for y in 0..self.cols {
                out.push(if self.walls[x * self.cols + y] { '#' } else { '.' });
            }
            out.push('\n');
        }
        out
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn in_bounds(&self, p: Position) -> bool {
        p.x < self.rows && p.y < self.cols
    }

    pub fn is_free(&self, p: Position) -> bool {
        self.in_bounds(p) && !self.walls[p.x * self.cols + p.y]
    }

    pub fn is_wall(&self, p: Position) -> bool {
        self.in_bounds(p) && self.walls[p.x * self.cols + p.y]
    }

    /// Row-major index. Caller guarantees `p` is in bounds.
    pub fn index(&self, p: Position) -> usize {
        p.x * self.cols + p.y
    }

    pub fn position(&self, index: usize) -> Position {
        Position::new(index / self.cols, index % self.cols)
    }

    pub fn free_cells(&self) -> Vec<Position> {
        (0..self.cell_count())
            .filter(|&i| !self.walls[i])
            .map(|i| self.position(i))
            .collect()
    }

    pub fn free_count(&self) -> usize {
        self.walls.iter().filter(|w| !**w).count()
    }

    /// Free 4-neighbours of `p`, in action order up, right, down, left.
    pub fn neighbors(&self, p: Position) -> impl Iterator<Item = Position> + '_ {
        Action::MOVES
            .iter()
            .filter_map(move |a| a.target(p))
            .filter(move |q| self.is_free(*q))
    }

    /// Breadth-first distances from `from` over free cells; `None` marks
    /// unreachable cells and walls.
    pub fn distances_from(&self, from: Position) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.cell_count()];
        if !self.is_free(from) {
            return dist;
        }
        let mut queue = VecDeque::new();
        dist[self.index(from)] = Some(0);
        queue.push_back(from);
        while let Some(p) = queue.pop_front() {
            let d = dist[self.index(p)].unwrap_or(0);
            for q in self.neighbors(p) {
                let qi = self.index(q);
                if dist[qi].is_none() {
                    dist[qi] = Some(d + 1);
                    queue.push_back(q);
                }
            }
        }
        dist
    }

    pub fn reachable(&self, from: Position, to: Position) -> bool {
        self.is_free(to) && self.distances_from(from)[self.index(to)].is_some()
    }

    /// True when every free cell lies in one 4-connected component.
    pub fn is_connected(&self) -> bool {
        match self.free_cells().first() {
            None => false,
            Some(&start) => {
                let dist = self.distances_from(start);
                dist.iter().filter(|d| d.is_some()).count() == self.free_count()
            }
        }
    }

    pub(crate) fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// One of the five per-agent actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Action {
    Stay = 0,
    Up = 1,
    Right = 2,
    Down = 3,
    Left = 4,
}

impl Action {
    pub const ALL: [Action; 5] = [
        Action::Stay,
        Action::Up,
        Action::Right,
        Action::Down,
        Action::Left,
    ];
    pub const MOVES: [Action; 4] = [Action::Up, Action::Right, Action::Down, Action::Left];

    pub fn from_code(code: u8) -> Option<Action> {
        Action::ALL.get(code as usize).copied()
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn delta(self) -> (isize, isize) {
        match self {
            Action::Stay => (0, 0),
            Action::Up => (-1, 0),
            Action::Right => (0, 1),
            Action::Down => (1, 0),
            Action::Left => (0, -1),
        }
    }

    pub fn opposite(self) -> Action {
        match self {
            Action::Stay => Action::Stay,
            Action::Up => Action::Down,
            Action::Right => Action::Left,
            Action::Down => Action::Up,
            Action::Left => Action::Right,
        }
    }

    /// Raw shifted coordinate, ignoring walls and the upper grid bound.
    pub fn target(self, p: Position) -> Option<Position> {
        let (dx, dy) = self.delta();
        p.offset(dx, dy)
    }

    /// The action moving from `from` to the adjacent-or-equal cell `to`.
    pub fn between(from: Position, to: Position) -> Option<Action> {
        Action::ALL.into_iter().find(|a| a.target(from) == Some(to))
    }
}

impl TryFrom<u8> for Action {
    type Error = GridError;

    fn try_from(code: u8) -> Result<Self, Self::Error> {
        Action::from_code(code).ok_or(GridError::BadAction(code as i64))
    }
}

/// Result of applying a single action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveOutcome {
    MovedTo(Position),
    /// The move pointed at a wall or off the grid; the agent keeps its cell.
    BlockedStays(Position),
}

impl MoveOutcome {
    pub fn position(self) -> Position {
        match self {
            MoveOutcome::MovedTo(p) | MoveOutcome::BlockedStays(p) => p,
        }
    }
}

pub fn apply_action(pos: Position, action: Action, grid: &GridLayout) -> MoveOutcome {
    match action.target(pos) {
        Some(q) if grid.is_free(q) => MoveOutcome::MovedTo(q),
        _ => MoveOutcome::BlockedStays(pos),
    }
}

/// One action per agent, indexed by agent id `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JointAction(pub Vec<Action>);

impl JointAction {
    pub fn stay(n: usize) -> Self {
        JointAction(vec![Action::Stay; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, agent: usize) -> Option<Action> {
        self.0.get(agent).copied()
    }

    pub fn codes(&self) -> Vec<u8> {
        self.0.iter().map(|a| a.code()).collect()
    }

    /// Build from a sparse map, requiring every agent in `0..n` exactly.
    pub fn from_map(n: usize, map: &BTreeMap<usize, Action>) -> Result<Self, GridError> {
        if let Some(&extra) = map.keys().find(|&&k| k >= n) {
            return Err(GridError::UnknownAgent(extra));
        }
        (0..n)
            .map(|i| map.get(&i).copied().ok_or(GridError::MissingAction(i)))
            .collect::<Result<Vec<_>, _>>()
            .map(JointAction)
    }
}

/// Which simultaneous-move patterns count as collisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollisionModel {
    /// Entering any currently occupied cell (including one being vacated)
    /// or sharing a target with another agent.
    #[default]
    Strict,
    /// Shared targets and head-on swaps only.
    Standard,
}

impl FromStr for CollisionModel {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(CollisionModel::Strict),
            "standard" => Ok(CollisionModel::Standard),
            other => Err(GridError::UnknownCollisionModel(other.to_string())),
        }
    }
}

impl fmt::Display for CollisionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CollisionModel::Strict => "strict",
            CollisionModel::Standard => "standard",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CollisionEvent {
    /// Two or more agents propose the same cell.
    SameTarget { cell: Position, agents: Vec<usize> },
    /// Two agents propose each other's current cells.
    Swap { agents: [usize; 2] },
    /// `mover` proposes the cell `occupant` currently holds (strict only).
    IntoOccupied {
        mover: usize,
        occupant: usize,
        cell: Position,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CollisionReport {
    pub flags: Vec<bool>,
    pub events: Vec<CollisionEvent>,
}

impl CollisionReport {
    pub fn any(&self) -> bool {
        self.flags.iter().any(|f| *f)
    }

    pub fn flagged(&self) -> Vec<usize> {
        self.flags
            .iter()
            .enumerate()
            .filter(|(_, f)| **f)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Flag the agents whose proposed moves collide under `model`.
///
/// `current` must be pairwise distinct; `proposed` holds each agent's
/// pre-resolution target.
pub fn detect_collisions(
    current: &[Position],
    proposed: &[Position],
    model: CollisionModel,
) -> Result<CollisionReport, GridError> {
    if current.len() != proposed.len() {
        return Err(GridError::AgentMismatch {
            current: current.len(),
            proposed: proposed.len(),
        });
    }
    let n = current.len();
    let mut flags = vec![false; n];
    let mut events = Vec::new();

    let mut by_target: BTreeMap<Position, Vec<usize>> = BTreeMap::new();
    for (i, p) in proposed.iter().enumerate() {
        by_target.entry(*p).or_default().push(i);
    }
    for (cell, agents) in by_target {
        if agents.len() > 1 {
            for &i in &agents {
                flags[i] = true;
            }
            events.push(CollisionEvent::SameTarget { cell, agents });
        }
    }

    let occupant: BTreeMap<Position, usize> =
        current.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    for i in 0..n {
        let Some(&j) = occupant.get(&proposed[i]) else {
            continue;
        };
        if j == i {
            continue;
        }
        let swap = proposed[j] == current[i];
        match model {
            CollisionModel::Strict => {
                flags[i] = true;
                if swap {
                    if i < j {
                        events.push(CollisionEvent::Swap { agents: [i, j] });
                    }
                } else {
                    events.push(CollisionEvent::IntoOccupied {
                        mover: i,
                        occupant: j,
                        cell: proposed[i],
                    });
                }
            }
            CollisionModel::Standard => {
                if swap {
                    flags[i] = true;
                    if i < j {
                        events.push(CollisionEvent::Swap { agents: [i, j] });
                    }
                }
            }
        }
    }
    Ok(CollisionReport { flags, events })
}

/// Categories of plan conflicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConflictKind {
    /// Two agents traverse the same edge in the same direction.
    EdgeSameDirection,
    /// Two or more agents occupy one cell at one timestep.
    Vertex,
    /// An agent enters a cell another agent held one step earlier.
    Following,
    /// Three or more agents rotate into each other's previous cells.
    Cycle,
    /// Two agents exchange cells in one step.
    Swapping,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictReport {
    pub kind: ConflictKind,
    pub agents: Vec<usize>,
    /// For vertex conflicts the timestep of co-occupation; for the
    /// transition kinds the timestep `t` of the move `t -> t + 1`.
    pub timestep: usize,
    pub locations: Vec<Position>,
}

/// Position of a plan at `t`, holding the final cell after the plan ends.
pub fn position_at(plan: &[Position], t: usize) -> Option<Position> {
    plan.get(t).or_else(|| plan.last()).copied()
}

/// Report every conflict instance of every category across the plans.
/// Plans shorter than the longest one are padded by waiting at their end.
pub fn classify_conflicts(plans: &[Vec<Position>]) -> Vec<ConflictReport> {
    let plans: Vec<&Vec<Position>> = plans.iter().filter(|p| !p.is_empty()).collect();
    let n = plans.len();
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    let horizon = plans.iter().map(|p| p.len()).max().unwrap_or(0);
    let at = |i: usize, t: usize| position_at(plans[i], t).expect("non-empty plan");

    for t in 0..horizon {
        let mut cells: BTreeMap<Position, Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            cells.entry(at(i, t)).or_default().push(i);
        }
        for (cell, agents) in cells {
            if agents.len() > 1 {
                out.push(ConflictReport {
                    kind: ConflictKind::Vertex,
                    agents,
                    timestep: t,
                    locations: vec![cell],
                });
            }
        }
        if t + 1 >= horizon {
            continue;
        }

        // successor[i] = agents whose cell at t agent i moves into at t + 1
        let mut successor: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            let (from, to) = (at(i, t), at(i, t + 1));
            if from == to {
                continue;
            }
            for j in 0..n {
                if j == i {
                    continue;
                }
                if at(j, t) == to {
                    successor[i].push(j);
                    out.push(ConflictReport {
                        kind: ConflictKind::Following,
                        agents: vec![i, j],
                        timestep: t,
                        locations: vec![to],
                    });
                    if at(j, t + 1) == from && i < j {
                        out.push(ConflictReport {
                            kind: ConflictKind::Swapping,
                            agents: vec![i, j],
                            timestep: t,
                            locations: vec![from, to],
                        });
                    }
                }
                if j > i && at(j, t) == from && at(j, t + 1) == to {
                    out.push(ConflictReport {
                        kind: ConflictKind::EdgeSameDirection,
                        agents: vec![i, j],
                        timestep: t,
                        locations: vec![from, to],
                    });
                }
            }
        }

        for cycle in rotation_cycles(&successor) {
            let locations = cycle.iter().map(|&i| at(i, t)).collect();
            out.push(ConflictReport {
                kind: ConflictKind::Cycle,
                agents: cycle,
                timestep: t,
                locations,
            });
        }
    }
    out
}

/// Simple cycles of length >= 3 in the "moves into the previous cell of"
/// relation, each reported once starting from its smallest agent id.
fn rotation_cycles(successor: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = successor.len();
    let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
    for start in 0..n {
        // depth-first enumeration restricted to agents > start
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        let mut path = vec![start];
        let mut on_path = vec![false; n];
        on_path[start] = true;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if *next < successor[node].len() {
                let succ = successor[node][*next];
                *next += 1;
                if succ == start && path.len() >= 3 {
                    found.insert(path.clone());
                } else if succ > start && !on_path[succ] {
                    on_path[succ] = true;
                    path.push(succ);
                    stack.push((succ, 0));
                }
            } else {
                stack.pop();
                if let Some(last) = path.pop() {
                    on_path[last] = false;
                }
            }
        }
    }
    found.into_iter().collect()
}

/// Smallest `t*` such that the plan stays on its final cell from `t*` on.
pub fn arrival_time(plan: &[Position]) -> usize {
    let Some(goal) = plan.last() else {
        return 0;
    };
    plan.iter()
        .rposition(|p| p != goal)
        .map(|i| i + 1)
        .unwrap_or(0)
}

pub fn makespan(plans: &[Vec<Position>]) -> usize {
    plans.iter().map(|p| arrival_time(p)).max().unwrap_or(0)
}

pub fn sum_of_costs(plans: &[Vec<Position>]) -> usize {
    plans.iter().map(|p| arrival_time(p)).sum()
}
