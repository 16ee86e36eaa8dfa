use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use mapf_core::grid::{GridLayout, Position};

use crate::error::BenchError;

/// Per-cell visit counts over successful episodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeatMap {
    pub layout: String,
    pub rows: usize,
    pub cols: usize,
    pub counts: Vec<Vec<u64>>,
    pub episodes: usize,
}

impl HeatMap {
    pub fn new(grid: &GridLayout) -> Self {
        HeatMap {
            layout: grid.name().to_string(),
            rows: grid.rows(),
            cols: grid.cols(),
            counts: vec![vec![0; grid.cols()]; grid.rows()],
            episodes: 0,
        }
    }

    /// Add one episode given the joint positions at t = 0..=T_end.
    pub fn add_episode(&mut self, grid: &GridLayout, positions: &[Vec<Position>]) -> Result<(), BenchError> {
        if grid.name() != self.layout || grid.rows() != self.rows || grid.cols() != self.cols {
            return Err(BenchError::LayoutMismatch {
                expected: self.layout.clone(),
                got: grid.name().to_string(),
            });
        }
        for joint in positions {
            for p in joint {
                self.counts[p.x][p.y] += 1;
            }
        }
        self.episodes += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &HeatMap) -> Result<(), BenchError> {
        if other.layout != self.layout || other.rows != self.rows || other.cols != self.cols {
            return Err(BenchError::LayoutMismatch {
                expected: self.layout.clone(),
                got: other.layout.clone(),
            });
        }
        for (row, other_row) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(other_row) {
                *c += o;
            }
        }
        self.episodes += other.episodes;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn max(&self) -> u64 {
        self.counts.iter().flatten().copied().max().unwrap_or(0)
    }

    pub fn get(&self, p: Position) -> u64 {
        self.counts[p.x][p.y]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.counts {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Plain (P2) greymap with maxval equal to the largest count, or 1 for
    /// an empty map.
    pub fn to_pgm(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "P2");
        let _ = writeln!(out, "# visit counts, {} episodes", self.episodes);
        let _ = writeln!(out, "{} {}", self.cols, self.rows);
        let _ = writeln!(out, "{}", self.max().max(1));
        for row in &self.counts {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        out
    }
}

/// Build a map from episode position sequences on one layout.
pub fn accumulate_heatmap<'a>(
    grid: &GridLayout,
    episodes: impl IntoIterator<Item = &'a [Vec<Position>]>,
) -> Result<HeatMap, BenchError> {
    let mut map = HeatMap::new(grid);
    for positions in episodes {
        map.add_episode(grid, positions)?;
    }
    Ok(map)
}

/// Joint positions over time for solver paths, each agent held on its
/// final cell until the longest path ends.
pub fn joint_positions_from_paths(paths: &[Vec<Position>]) -> Vec<Vec<Position>> {
    let horizon = paths.iter().map(Vec::len).max().unwrap_or(0);
    (0..horizon)
        .map(|t| paths.iter().map(|p| p[t.min(p.len() - 1)]).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatMapFormat {
    Csv,
    Pgm,
}

impl FromStr for HeatMapFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(HeatMapFormat::Csv),
            "pgm" => Ok(HeatMapFormat::Pgm),
            other => Err(BenchError::Config(format!("unknown heat map format {other:?}"))),
        }
    }
}

impl HeatMapFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("pgm") => HeatMapFormat::Pgm,
            _ => HeatMapFormat::Csv,
        }
    }
}

pub fn render_heatmap(map: &HeatMap, format: HeatMapFormat, path: &Path) -> Result<(), BenchError> {
    let text = match format {
        HeatMapFormat::Csv => map.to_csv(),
        HeatMapFormat::Pgm => map.to_pgm(),
    };
    std::fs::write(path, text).map_err(BenchError::io(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open(rows: usize, cols: usize) -> GridLayout {
        GridLayout::new("open", rows, cols, vec![false; rows * cols]).unwrap()
    }

    #[test]
    fn straight_path_marks_five_cells() {
        let g = open(1, 5);
        let path: Vec<Position> = (0..5).map(|y| Position::new(0, y)).collect();
        let episode = joint_positions_from_paths(&[path]);
        let map = accumulate_heatmap(&g, [episode.as_slice()]).unwrap();
        assert_eq!(map.counts, vec![vec![1; 5]]);
        assert_eq!(map.total(), 5);
    }

    #[test]
    fn empty_input_is_zero_map() {
        let g = open(2, 3);
        let map = accumulate_heatmap(&g, std::iter::empty()).unwrap();
        assert_eq!(map.total(), 0);
        assert!(map.to_pgm().lines().nth(3) == Some("1"));
    }

    #[test]
    fn shorter_paths_are_padded() {
        let a = vec![Position::new(0, 0), Position::new(0, 1), Position::new(0, 2)];
        let b = vec![Position::new(1, 0), Position::new(1, 1)];
        let joint = joint_positions_from_paths(&[a, b]);
        assert_eq!(joint.len(), 3);
        assert_eq!(joint[2][1], Position::new(1, 1));
    }

    #[test]
    fn pgm_has_one_value_per_cell() {
        let g = open(3, 3);
        let mut map = HeatMap::new(&g);
        map.add_episode(&g, &[vec![Position::new(1, 1)]]).unwrap();
        let pgm = map.to_pgm();
        let body: Vec<&str> = pgm.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body[0], "P2");
        assert_eq!(body[1], "3 3");
        assert_eq!(body[2], "1");
        let values: Vec<u64> = body[3..].iter().flat_map(|l| l.split_whitespace()).map(|v| v.parse().unwrap()).collect();
        assert_eq!(values.len(), 9);
        assert_eq!(values.iter().sum::<u64>(), 1);
    }

    #[test]
    fn mismatched_layout_rejected() {
        let mut map = HeatMap::new(&open(2, 2));
        assert!(map.add_episode(&open(3, 3), &[]).is_err());
    }

    #[test]
    fn csv_render_to_file() {
        let g = open(2, 2);
        let mut map = HeatMap::new(&g);
        map.add_episode(&g, &[vec![Position::new(0, 1)], vec![Position::new(0, 1)]]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        render_heatmap(&map, HeatMapFormat::from_path(&path), &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "0,2\n0,0\n");
    }
}
