//! Reference-model layouts and seeded task sampling.
//!
//! Seven layout families cover three use cases: small conflict situations
//! (`rm1.1` to `rm1.4`), warehouses (`rm2.1`, `rm2.2`) and production
//! logistics (`rm3.1`). Each (family, variant, params) triple resolves to
//! exactly one grid. The conflict-situation families also carry a fixed
//! default task set; the larger families are meant for random sampling.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::LayoutError;
use crate::grid::{GridLayout, Position};

/// Rejected resamples before `sample_tasks` gives up.
pub const MAX_RESAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "rm1.1")]
    Rm1_1,
    #[serde(rename = "rm1.2")]
    Rm1_2,
    #[serde(rename = "rm1.3")]
    Rm1_3,
    #[serde(rename = "rm1.4")]
    Rm1_4,
    #[serde(rename = "rm2.1")]
    Rm2_1,
    #[serde(rename = "rm2.2")]
    Rm2_2,
    #[serde(rename = "rm3.1")]
    Rm3_1,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Rm1_1,
        Family::Rm1_2,
        Family::Rm1_3,
        Family::Rm1_4,
        Family::Rm2_1,
        Family::Rm2_2,
        Family::Rm3_1,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Family::Rm1_1 => "rm1.1",
            Family::Rm1_2 => "rm1.2",
            Family::Rm1_3 => "rm1.3",
            Family::Rm1_4 => "rm1.4",
            Family::Rm2_1 => "rm2.1",
            Family::Rm2_2 => "rm2.2",
            Family::Rm3_1 => "rm3.1",
        }
    }

    pub fn variants(self) -> &'static [Variant] {
        use Variant::*;
        match self {
            Family::Rm1_1 => &[Basic, Unfavorable, AltAisle],
            Family::Rm1_2 => &[Basic, MoreAgents, LongCorridor],
            Family::Rm1_3 => &[Basic, MoreAgents, MovedPassage],
            Family::Rm1_4 => &[Basic, Crossed, LongArms],
            Family::Rm2_1 => &[Block, DeadEnds],
            Family::Rm2_2 => &[Basic],
            Family::Rm3_1 => &[Basic, ShortGoalAisles],
        }
    }

    pub fn default_variant(self) -> Variant {
        self.variants()[0]
    }

    /// Whether the family ships a fixed start/goal assignment.
    pub fn has_default_tasks(self) -> bool {
        matches!(
            self,
            Family::Rm1_1 | Family::Rm1_2 | Family::Rm1_3 | Family::Rm1_4
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Family {
    type Err = LayoutError;

    /// Accepts `rm2.1`, `rm2_1`, `RM2.1` and the bare `2.1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', ".");
        let norm = norm.strip_prefix("rm").unwrap_or(&norm);
        Family::ALL
            .into_iter()
            .find(|f| &f.id()[2..] == norm)
            .ok_or_else(|| LayoutError::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Basic,
    Unfavorable,
    AltAisle,
    MoreAgents,
    LongCorridor,
    MovedPassage,
    Crossed,
    LongArms,
    Block,
    DeadEnds,
    ShortGoalAisles,
}

impl Variant {
    pub fn id(self) -> &'static str {
        match self {
            Variant::Basic => "basic",
            Variant::Unfavorable => "unfavorable",
            Variant::AltAisle => "alt-aisle",
            Variant::MoreAgents => "more-agents",
            Variant::LongCorridor => "long-corridor",
            Variant::MovedPassage => "moved-passage",
            Variant::Crossed => "crossed",
            Variant::LongArms => "long-arms",
            Variant::Block => "block",
            Variant::DeadEnds => "dead-ends",
            Variant::ShortGoalAisles => "short-goal-aisles",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReferenceModelId {
    pub family: Family,
    pub variant: Variant,
}

impl ReferenceModelId {
    pub fn new(family: Family, variant: Variant) -> Result<Self, LayoutError> {
        if !family.variants().contains(&variant) {
            return Err(LayoutError::UnknownVariant {
                family: family.id().to_string(),
                variant: variant.id().to_string(),
            });
        }
        Ok(ReferenceModelId { family, variant })
    }

    /// Parse a family id and an optional variant name (the family default
    /// when absent). `basic` is accepted for the warehouse block layout.
    pub fn parse(family: &str, variant: Option<&str>) -> Result<Self, LayoutError> {
        let family: Family = family.parse()?;
        let Some(name) = variant else {
            return Ok(ReferenceModelId {
                family,
                variant: family.default_variant(),
            });
        };
        let norm = name.trim().to_ascii_lowercase().replace('_', "-");
        let variant = family
            .variants()
            .iter()
            .copied()
            .find(|v| v.id() == norm || (norm == "basic" && v.id() == family.default_variant().id()))
            .ok_or_else(|| LayoutError::UnknownVariant {
                family: family.id().to_string(),
                variant: name.to_string(),
            })?;
        Ok(ReferenceModelId { family, variant })
    }

    pub fn name(&self) -> String {
        format!("{}-{}", self.family.id(), self.variant.id())
    }
}

impl fmt::Display for ReferenceModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.family, self.variant)
    }
}

/// Optional overrides for the generators. `None` selects the variant's
/// default.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct VariantParams {
    /// rm1.2: cells in the single-file corridor, >= 3.
    pub corridor_length: Option<usize>,
    /// rm1.3: row of the passage through the dividing wall.
    pub passage_row: Option<usize>,
    /// rm1.4: cells per arm outside the central square, >= 1.
    pub arm_length: Option<usize>,
    /// rm2.1: number of vertical aisles, >= 2.
    pub aisle_count: Option<usize>,
    /// rm2.1: shelf height per half, >= 1.
    pub aisle_length: Option<usize>,
    /// Number of agents; for families with default tasks this keeps the
    /// first `n` default assignments.
    pub n_agents: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Task {
    pub start: Position,
    pub goal: Position,
}

/// Per-agent start and goal cells, indexed by agent id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskSet(pub Vec<Task>);

impl TaskSet {
    pub fn from_pairs(pairs: &[((usize, usize), (usize, usize))]) -> Self {
        TaskSet(
            pairs
                .iter()
                .map(|&(s, g)| Task {
                    start: s.into(),
                    goal: g.into(),
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn starts(&self) -> Vec<Position> {
        self.0.iter().map(|t| t.start).collect()
    }

    pub fn goals(&self) -> Vec<Position> {
        self.0.iter().map(|t| t.goal).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Task> {
        self.0.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuiltLayout {
    pub grid: GridLayout,
    pub default_tasks: Option<TaskSet>,
}

pub fn build_layout(id: ReferenceModelId, params: &VariantParams) -> Result<BuiltLayout, LayoutError> {
    ReferenceModelId::new(id.family, id.variant)?;
    let (grid, tasks) = match id.family {
        Family::Rm1_1 => rm1_1(id.variant)?,
        Family::Rm1_2 => rm1_2(id.variant, params)?,
        Family::Rm1_3 => rm1_3(id.variant, params)?,
        Family::Rm1_4 => rm1_4(id.variant, params)?,
        Family::Rm2_1 => (rm2_1(id.variant, params)?, None),
        Family::Rm2_2 => (from_rows(&RM2_2)?, None),
        Family::Rm3_1 => (rm3_1(id.variant)?, None),
    };
    let grid = grid.with_name(id.name());
    let default_tasks = match (tasks, params.n_agents) {
        (Some(tasks), Some(n)) if n > tasks.len() => {
            return Err(LayoutError::Param(format!(
                "{} {} defines {} default agents, {} requested",
                id.family,
                id.variant,
                tasks.len(),
                n
            )))
        }
        (Some(tasks), Some(n)) => Some(TaskSet(tasks.0[..n].to_vec())),
        (tasks, _) => tasks,
    };
    Ok(BuiltLayout { grid, default_tasks })
}

fn from_rows(rows: &[&str]) -> Result<GridLayout, LayoutError> {
    Ok(GridLayout::from_text("", &rows.join("\n"))?)
}

fn param_at_least(name: &str, value: usize, min: usize) -> Result<usize, LayoutError> {
    if value < min {
        return Err(LayoutError::Param(format!("{name} must be at least {min}, got {value}")));
    }
    Ok(value)
}

/// A corridor with a one-cell evasion pocket. The pocket column is placed
/// so that the optimal two-agent exchange takes nine joint steps.
fn rm1_1(variant: Variant) -> Result<(GridLayout, Option<TaskSet>), LayoutError> {
    let (rows, tasks): (&[&str], _) = match variant {
        Variant::Basic => (
            &["#########", "###.#####", "#.......#", "#########"],
            TaskSet::from_pairs(&[((2, 1), (2, 7)), ((2, 7), (2, 1))]),
        ),
        Variant::Unfavorable => (
            &["#########", "##.######", "#.......#", "#########"],
            TaskSet::from_pairs(&[((2, 3), (2, 7)), ((2, 6), (2, 1))]),
        ),
        _ => (
            &["#########", "#.......#", "#####.###", "#########"],
            TaskSet::from_pairs(&[((1, 1), (1, 7)), ((1, 7), (1, 1))]),
        ),
    };
    Ok((from_rows(rows)?, Some(tasks)))
}

/// Two open end zones joined by a single-file corridor.
fn rm1_2(variant: Variant, params: &VariantParams) -> Result<(GridLayout, Option<TaskSet>), LayoutError> {
    let default_len = if variant == Variant::LongCorridor { 7 } else { 5 };
    let len = param_at_least("corridor_length", params.corridor_length.unwrap_or(default_len), 3)?;
    let zone = 2;
    let rows = 3;
    let cols = 2 * zone + len;
    let mut walls = vec![false; rows * cols];
    for y in zone..zone + len {
        walls[y] = true;
        walls[2 * cols + y] = true;
    }
    let last = cols - 1;
    let mut pairs = vec![((1, 0), (1, last)), ((1, last), (1, 0))];
    if variant == Variant::MoreAgents {
        pairs.push(((0, 0), (2, last)));
    }
    Ok((GridLayout::new("", rows, cols, walls)?, Some(TaskSet::from_pairs(&pairs))))
}

/// A room split by a wall with exactly one passage.
fn rm1_3(variant: Variant, params: &VariantParams) -> Result<(GridLayout, Option<TaskSet>), LayoutError> {
    let (rows, cols, default_passage) = match variant {
        Variant::MovedPassage => (7, 9, 5),
        _ => (5, 9, 2),
    };
    let passage = params.passage_row.unwrap_or(default_passage);
    if passage >= rows {
        return Err(LayoutError::Param(format!(
            "passage_row must be below {rows}, got {passage}"
        )));
    }
    let wall_col = cols / 2;
    let mut walls = vec![false; rows * cols];
    for x in 0..rows {
        walls[x * cols + wall_col] = x != passage;
    }
    let mid = rows / 2;
    let last = cols - 1;
    let mut pairs = vec![((mid, 0), (mid, last)), ((mid, last), (mid, 0))];
    if variant == Variant::MoreAgents {
        pairs.push(((0, 1), (rows - 1, last - 1)));
    }
    Ok((GridLayout::new("", rows, cols, walls)?, Some(TaskSet::from_pairs(&pairs))))
}

/// Four single-file arms meeting at an open 3x3 junction.
fn rm1_4(variant: Variant, params: &VariantParams) -> Result<(GridLayout, Option<TaskSet>), LayoutError> {
    let default_arm = if variant == Variant::LongArms { 3 } else { 2 };
    let arm = param_at_least("arm_length", params.arm_length.unwrap_or(default_arm), 1)?;
    let size = 2 * arm + 3;
    let c = arm + 1;
    let mut walls = vec![true; size * size];
    for i in 0..size {
        walls[c * size + i] = false;
        walls[i * size + c] = false;
    }
    for x in c - 1..=c + 1 {
        for y in c - 1..=c + 1 {
            walls[x * size + y] = false;
        }
    }
    let last = size - 1;
    let (north, south, west, east) = ((0, c), (last, c), (c, 0), (c, last));
    let pairs = match variant {
        // each agent turns right instead of crossing straight
        Variant::Crossed => vec![(north, west), (east, north), (south, east), (west, south)],
        _ => vec![(north, south), (south, north), (west, east), (east, west)],
    };
    Ok((GridLayout::new("", size, size, walls)?, Some(TaskSet::from_pairs(&pairs))))
}

/// Shelf blocks between parallel vertical aisles, three cross aisles and a
/// free side road on the right. The dead-end variant walls off the top and
/// bottom cross aisles between the outer aisles.
fn rm2_1(variant: Variant, params: &VariantParams) -> Result<GridLayout, LayoutError> {
    let aisles = param_at_least("aisle_count", params.aisle_count.unwrap_or(5), 2)?;
    let shelf = param_at_least("aisle_length", params.aisle_length.unwrap_or(3), 1)?;
    let rows = 2 * shelf + 3;
    let cols = 3 * aisles - 1;
    let cross = [0, shelf + 1, rows - 1];
    let mut walls = vec![false; rows * cols];
    for x in 0..rows {
        for y in 0..cols - 1 {
            let aisle = y % 3 == 0;
            walls[x * cols + y] = !aisle && !cross.contains(&x);
        }
    }
    if variant == Variant::DeadEnds {
        for x in [0, rows - 1] {
            for y in 1..cols - 2 {
                walls[x * cols + y] = true;
            }
        }
    }
    Ok(GridLayout::new("", rows, cols, walls)?)
}

/// Fishbone warehouse: a perimeter loop, a half-height central spine and
/// four staircase-rasterised diagonal aisles, asymmetric left to right.
const RM2_2: [&str; 10] = [
    "..............",
    "...#######..#.",
    ".#..#####..##.",
    ".##..###..##..",
    "..##.....##...",
    "...###.###..#.",
    ".#..##.##..##.",
    ".##..#.#..###.",
    ".###.....####.",
    "..............",
];

/// Production hall: two-lane top and right roads, one-lane left, middle and
/// bottom roads, and dead-end goal aisles hanging from the top road.
fn rm3_1(variant: Variant) -> Result<GridLayout, LayoutError> {
    let rows: [&str; 10] = if variant == Variant::ShortGoalAisles {
        [
            "..............",
            "..............",
            ".##.##.##.##..",
            ".###########..",
            ".###########..",
            ".###########..",
            "..............",
            ".###.####.##..",
            ".###.####.##..",
            "..............",
        ]
    } else {
        [
            "..............",
            "..............",
            ".##.##.##.##..",
            ".##.##.##.##..",
            ".##.##.##.##..",
            ".###########..",
            "..............",
            ".###.####.##..",
            ".###.####.##..",
            "..............",
        ]
    };
    from_rows(&rows)
}

/// Sample `n` start/goal pairs uniformly without replacement among free
/// cells, rejecting draws that violate the task-set invariants.
pub fn sample_tasks<R: Rng + ?Sized>(grid: &GridLayout, n: usize, rng: &mut R) -> Result<TaskSet, LayoutError> {
    let free = grid.free_cells();
    if n == 0 {
        return Err(LayoutError::Param("at least one agent is required".into()));
    }
    if free.len() < 2 * n {
        return Err(LayoutError::Capacity {
            agents: n,
            needed: 2 * n,
            free: free.len(),
        });
    }
    let mut pool = free.clone();
    for _ in 0..MAX_RESAMPLES {
        let (starts, _) = pool.partial_shuffle(rng, n);
        let starts = starts.to_vec();
        let (goals, _) = pool.partial_shuffle(rng, n);
        let tasks = TaskSet(
            starts
                .iter()
                .zip(goals.iter())
                .map(|(&start, &goal)| Task { start, goal })
                .collect(),
        );
        if validate_layout(grid, &tasks).is_valid() {
            return Ok(tasks);
        }
    }
    Err(LayoutError::Infeasible(MAX_RESAMPLES))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    StartNotFree { agent: usize, cell: Position },
    GoalNotFree { agent: usize, cell: Position },
    DuplicateStart { agents: [usize; 2], cell: Position },
    DuplicateGoal { agents: [usize; 2], cell: Position },
    StartIsGoal { agent: usize },
    Unreachable { agent: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::StartNotFree { agent, cell } => write!(f, "agent {agent}: start {cell} is not a free cell"),
            Violation::GoalNotFree { agent, cell } => write!(f, "agent {agent}: goal {cell} is not a free cell"),
            Violation::DuplicateStart { agents, cell } => {
                write!(f, "agents {} and {} share start {cell}", agents[0], agents[1])
            }
            Violation::DuplicateGoal { agents, cell } => {
                write!(f, "agents {} and {} share goal {cell}", agents[0], agents[1])
            }
            Violation::StartIsGoal { agent } => write!(f, "agent {agent}: start equals goal"),
            Violation::Unreachable { agent } => write!(f, "agent {agent}: goal unreachable from start"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidityReport {
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_layout(grid: &GridLayout, tasks: &TaskSet) -> ValidityReport {
    let mut violations = Vec::new();
    for (i, task) in tasks.iter().enumerate() {
        let start_ok = grid.is_free(task.start);
        let goal_ok = grid.is_free(task.goal);
        if !start_ok {
            violations.push(Violation::StartNotFree { agent: i, cell: task.start });
        }
        if !goal_ok {
            violations.push(Violation::GoalNotFree { agent: i, cell: task.goal });
        }
        if task.start == task.goal {
            violations.push(Violation::StartIsGoal { agent: i });
        } else if start_ok && goal_ok && !grid.reachable(task.start, task.goal) {
            violations.push(Violation::Unreachable { agent: i });
        }
        for (j, other) in tasks.iter().enumerate().skip(i + 1) {
            if other.start == task.start {
                violations.push(Violation::DuplicateStart { agents: [i, j], cell: task.start });
            }
            if other.goal == task.goal {
                violations.push(Violation::DuplicateGoal { agents: [i, j], cell: task.goal });
            }
        }
    }
    ValidityReport { violations }
}

/// JSON sidecar stored next to a layout's text grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutMeta {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
    #[serde(default)]
    pub params: VariantParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_tasks: Option<TaskSet>,
}

pub const GRID_EXTENSION: &str = "grid";
pub const META_EXTENSION: &str = "json";

/// Write `<dir>/<name>.grid` and `<dir>/<name>.json`; returns both paths.
pub fn save_layout(
    dir: &Path,
    grid: &GridLayout,
    meta: &LayoutMeta,
) -> Result<(PathBuf, PathBuf), LayoutError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| LayoutError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let grid_path = dir.join(format!("{}.{GRID_EXTENSION}", meta.name));
    let meta_path = dir.join(format!("{}.{META_EXTENSION}", meta.name));
    std::fs::write(&grid_path, grid.to_text()).map_err(io(&grid_path))?;
    let json = serde_json::to_string_pretty(meta).map_err(|source| LayoutError::Json {
        path: meta_path.display().to_string(),
        source,
    })?;
    std::fs::write(&meta_path, json + "\n").map_err(io(&meta_path))?;
    Ok((grid_path, meta_path))
}

/// `path` with its layout extension replaced by `ext`. Names such as
/// `rm1.1-basic` contain dots, so other extensions are kept and appended to.
fn sibling(path: &Path, ext: &str) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some(GRID_EXTENSION) | Some(META_EXTENSION) => path.with_extension(ext),
        _ => {
            let mut name = path.as_os_str().to_os_string();
            name.push(".");
            name.push(ext);
            PathBuf::from(name)
        }
    }
}

/// Load a layout from either its grid file or its sidecar; the partner
/// file is found by swapping the extension. A missing sidecar is allowed.
pub fn load_layout(path: &Path) -> Result<(BuiltLayout, LayoutMeta), LayoutError> {
    let grid_path = sibling(path, GRID_EXTENSION);
    let meta_path = sibling(path, META_EXTENSION);
    let text = std::fs::read_to_string(&grid_path).map_err(|source| LayoutError::Io {
        path: grid_path.display().to_string(),
        source,
    })?;
    let stem = grid_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let meta = match std::fs::read_to_string(&meta_path) {
        Ok(json) => serde_json::from_str::<LayoutMeta>(&json).map_err(|source| LayoutError::Json {
            path: meta_path.display().to_string(),
            source,
        })?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => LayoutMeta {
            name: stem,
            family: None,
            variant: None,
            params: VariantParams::default(),
            default_tasks: None,
        },
        Err(source) => {
            return Err(LayoutError::Io {
                path: meta_path.display().to_string(),
                source,
            })
        }
    };
    let grid = GridLayout::from_text(meta.name.clone(), &text)?;
    if let Some(tasks) = &meta.default_tasks {
        let report = validate_layout(&grid, tasks);
        if let Some(v) = report.violations.first() {
            return Err(LayoutError::Param(format!("{}: {v}", grid_path.display())));
        }
    }
    let built = BuiltLayout {
        grid,
        default_tasks: meta.default_tasks.clone(),
    };
    Ok((built, meta))
}

/// Resolve a CLI-style layout reference: a family id such as `rm2.1`, or a
/// path to a layout file. Bare names are also looked up in `search_dir`.
pub fn resolve_layout(
    reference: &str,
    variant: Option<&str>,
    params: &VariantParams,
    search_dir: Option<&Path>,
) -> Result<BuiltLayout, LayoutError> {
    if let Ok(id) = ReferenceModelId::parse(reference, variant) {
        return build_layout(id, params);
    }
    if Family::from_str(reference).is_ok() {
        // family parsed, the variant did not
        ReferenceModelId::parse(reference, variant)?;
    }
    let direct = Path::new(reference);
    let candidates = std::iter::once(direct.to_path_buf())
        .chain(search_dir.map(|d| d.join(reference)))
        .collect::<Vec<_>>();
    for candidate in &candidates {
        if sibling(candidate, GRID_EXTENSION).exists() {
            let (mut built, _) = load_layout(candidate)?;
            if let (Some(tasks), Some(n)) = (&built.default_tasks, params.n_agents) {
                if n <= tasks.len() {
                    built.default_tasks = Some(TaskSet(tasks.0[..n].to_vec()));
                } else {
                    built.default_tasks = None;
                }
            }
            return Ok(built);
        }
    }
    Err(LayoutError::UnknownFamily(reference.to_string()))
}

/// Every (family, variant) pair with default parameters.
pub fn all_reference_models() -> Vec<ReferenceModelId> {
    Family::ALL
        .iter()
        .flat_map(|&family| {
            family
                .variants()
                .iter()
                .map(move |&variant| ReferenceModelId { family, variant })
        })
        .collect()
}

/// Distinct cells used by a task set, for quick overlap checks.
pub fn occupied_cells(tasks: &TaskSet) -> BTreeSet<Position> {
    tasks.iter().flat_map(|t| [t.start, t.goal]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_from_seed;

    fn build(family: Family, variant: Variant) -> BuiltLayout {
        build_layout(ReferenceModelId::new(family, variant).unwrap(), &VariantParams::default()).unwrap()
    }

    #[test]
    fn family_ids_parse() {
        assert_eq!("rm2.1".parse::<Family>().unwrap(), Family::Rm2_1);
        assert_eq!("rm2_1".parse::<Family>().unwrap(), Family::Rm2_1);
        assert_eq!("3.1".parse::<Family>().unwrap(), Family::Rm3_1);
        assert!("rm9.9".parse::<Family>().is_err());
        let id = ReferenceModelId::parse("rm2.1", Some("dead-ends")).unwrap();
        assert_eq!(id.variant, Variant::DeadEnds);
        assert_eq!(ReferenceModelId::parse("rm2.1", Some("basic")).unwrap().variant, Variant::Block);
        assert!(ReferenceModelId::parse("rm2.1", Some("long-arms")).is_err());
    }

    #[test]
    fn every_layout_is_connected_and_sized() {
        for id in all_reference_models() {
            let built = build_layout(id, &VariantParams::default()).unwrap();
            assert!(built.grid.is_connected(), "{id} not connected");
            assert!(built.grid.rows() <= 10 && built.grid.cols() <= 14, "{id} too large");
            assert_eq!(built.default_tasks.is_some(), id.family.has_default_tasks(), "{id}");
            if let Some(tasks) = &built.default_tasks {
                let report = validate_layout(&built.grid, tasks);
                assert!(report.is_valid(), "{id}: {:?}", report.violations);
            }
        }
    }

    #[test]
    fn basic_conflict_layouts_fit_small_bound() {
        for family in [Family::Rm1_1, Family::Rm1_2, Family::Rm1_3, Family::Rm1_4] {
            let g = build(family, Variant::Basic).grid;
            assert!(g.rows() <= 7 && g.cols() <= 9, "{family}: {}x{}", g.rows(), g.cols());
        }
    }

    #[test]
    fn build_is_deterministic() {
        for id in all_reference_models() {
            let a = build_layout(id, &VariantParams::default()).unwrap();
            let b = build_layout(id, &VariantParams::default()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn dead_ends_share_outer_shell_with_block() {
        let block = build(Family::Rm2_1, Variant::Block).grid;
        let dead = build(Family::Rm2_1, Variant::DeadEnds).grid;
        assert_eq!((block.rows(), block.cols()), (dead.rows(), dead.cols()));
        let mut extra_walls = 0;
        for p in block.free_cells() {
            if dead.is_wall(p) {
                extra_walls += 1;
                assert!(p.x == 0 || p.x == block.rows() - 1, "only cross-aisle ends are walled");
            }
        }
        assert!(extra_walls > 0);
        assert!(dead.free_cells().iter().all(|p| block.is_free(*p)));
        // every aisle cell stays reachable
        assert!(dead.is_connected());
    }

    #[test]
    fn corridor_layout_is_single_file() {
        let built = build_layout(
            ReferenceModelId::new(Family::Rm1_2, Variant::Basic).unwrap(),
            &VariantParams {
                corridor_length: Some(5),
                n_agents: Some(2),
                ..Default::default()
            },
        )
        .unwrap();
        let g = &built.grid;
        assert_eq!(built.default_tasks.unwrap().len(), 2);
        for y in 2..7 {
            assert!(g.is_free(Position::new(1, y)));
            assert!(g.is_wall(Position::new(0, y)) && g.is_wall(Position::new(2, y)));
        }
        for y in [0, 1, 7, 8] {
            for x in 0..3 {
                assert!(g.is_free(Position::new(x, y)));
            }
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let id = ReferenceModelId::new(Family::Rm1_2, Variant::Basic).unwrap();
        let short = VariantParams {
            corridor_length: Some(2),
            ..Default::default()
        };
        assert!(matches!(build_layout(id, &short), Err(LayoutError::Param(_))));
        let id = ReferenceModelId::new(Family::Rm1_3, Variant::Basic).unwrap();
        let off = VariantParams {
            passage_row: Some(5),
            ..Default::default()
        };
        assert!(matches!(build_layout(id, &off), Err(LayoutError::Param(_))));
        let id = ReferenceModelId::new(Family::Rm1_1, Variant::Basic).unwrap();
        let many = VariantParams {
            n_agents: Some(3),
            ..Default::default()
        };
        assert!(matches!(build_layout(id, &many), Err(LayoutError::Param(_))));
    }

    #[test]
    fn single_passage() {
        let g = build(Family::Rm1_3, Variant::Basic).grid;
        let wall_col = g.cols() / 2;
        let open: Vec<usize> = (0..g.rows()).filter(|&x| g.is_free(Position::new(x, wall_col))).collect();
        assert_eq!(open, vec![2]);
    }

    #[test]
    fn sample_tasks_rm2_1_seed_42() {
        let g = build(Family::Rm2_1, Variant::Block).grid;
        let tasks = sample_tasks(&g, 4, &mut rng_from_seed(42)).unwrap();
        assert_eq!(tasks.len(), 4);
        assert!(validate_layout(&g, &tasks).is_valid());
        let again = sample_tasks(&g, 4, &mut rng_from_seed(42)).unwrap();
        assert_eq!(tasks, again);
    }

    #[test]
    fn sample_tasks_capacity_error() {
        let g = GridLayout::from_text("tiny", "...\n").unwrap();
        assert!(matches!(
            sample_tasks(&g, 2, &mut rng_from_seed(1)),
            Err(LayoutError::Capacity { needed: 4, free: 3, .. })
        ));
    }

    #[test]
    fn sample_tasks_exhaustive_3x3() {
        // n = free/2 on a tiny grid: must succeed or report capacity, and
        // never produce duplicates
        let g = GridLayout::from_text("3x3", "...\n...\n...\n").unwrap();
        for n in 1..=5 {
            for seed in 0..200 {
                match sample_tasks(&g, n, &mut rng_from_seed(seed)) {
                    Ok(tasks) => {
                        assert!(n <= 4);
                        assert!(validate_layout(&g, &tasks).is_valid());
                    }
                    Err(LayoutError::Capacity { .. }) => assert_eq!(n, 5),
                    Err(e) => panic!("unexpected {e}"),
                }
            }
        }
    }

    #[test]
    fn validate_examples() {
        let g = GridLayout::from_text("v", "..#.\n..#.\n..##\n").unwrap();
        let ok = TaskSet::from_pairs(&[((0, 0), (2, 1))]);
        assert!(validate_layout(&g, &ok).is_valid());
        let on_wall = TaskSet::from_pairs(&[((0, 0), (0, 2))]);
        assert_eq!(
            validate_layout(&g, &on_wall).violations,
            vec![Violation::GoalNotFree { agent: 0, cell: Position::new(0, 2) }]
        );
        let walled = TaskSet::from_pairs(&[((0, 0), (0, 3))]);
        assert_eq!(validate_layout(&g, &walled).violations, vec![Violation::Unreachable { agent: 0 }]);
    }

    #[test]
    fn layout_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let built = build(Family::Rm1_1, Variant::Basic);
        let meta = LayoutMeta {
            name: "rm1.1-basic".into(),
            family: Some(Family::Rm1_1),
            variant: Some(Variant::Basic),
            params: VariantParams::default(),
            default_tasks: built.default_tasks.clone(),
        };
        let (grid_path, meta_path) = save_layout(dir.path(), &built.grid, &meta).unwrap();
        let (loaded, loaded_meta) = load_layout(&grid_path).unwrap();
        assert_eq!(loaded.grid.to_text(), built.grid.to_text());
        assert_eq!(loaded.default_tasks, built.default_tasks);
        assert_eq!(loaded_meta, meta);
        let (from_meta, _) = load_layout(&meta_path).unwrap();
        assert_eq!(from_meta.grid, loaded.grid);
        let resolved = resolve_layout("rm1.1-basic", None, &VariantParams::default(), Some(dir.path())).unwrap();
        assert_eq!(resolved.grid, loaded.grid);
    }

    #[test]
    fn sidecar_schema() {
        let meta = LayoutMeta {
            name: "x".into(),
            family: Some(Family::Rm2_1),
            variant: Some(Variant::DeadEnds),
            params: VariantParams::default(),
            default_tasks: Some(TaskSet::from_pairs(&[((0, 0), (1, 2))])),
        };
        let v = serde_json::to_value(&meta).unwrap();
        assert_eq!(v["family"], "rm2.1");
        assert_eq!(v["variant"], "dead-ends");
        assert_eq!(v["default_tasks"][0]["start"], serde_json::json!([0, 0]));
        assert_eq!(v["default_tasks"][0]["goal"], serde_json::json!([1, 2]));
    }
}
