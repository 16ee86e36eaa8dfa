use std::fs::File;
use std::io::{BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::BenchError;
use crate::run::run_benchmark;
use crate::spec::{Algorithm, BenchmarkSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub agents: usize,
    pub algorithm: Algorithm,
    pub instances: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub median_timesteps: Option<f64>,
    pub median_wall_ms: f64,
    pub mean_wall_ms: f64,
}

/// Parse `LO..HI` (inclusive) or a single count.
pub fn parse_agent_range(s: &str) -> Result<RangeInclusive<usize>, BenchError> {
    let bad = || BenchError::Config(format!("agent range {s:?} is not LO..HI"));
    let (lo, hi) = match s.split_once("..") {
        Some((lo, hi)) => (lo, hi.trim_start_matches('=')),
        None => (s, s),
    };
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi || lo == 0 {
        return Err(bad());
    }
    Ok(lo..=hi)
}

/// One benchmark per agent count, one row per (count, algorithm).
pub fn scalability_sweep(spec: &BenchmarkSpec, agents: RangeInclusive<usize>) -> Result<Vec<SweepRow>, BenchError> {
    if agents.is_empty() {
        return Err(BenchError::Config("empty agent range".into()));
    }
    let mut rows = Vec::new();
    for n in agents {
        let spec = BenchmarkSpec {
            n_agents: n,
            fixed_tasks: None,
            ..spec.clone()
        };
        let report = run_benchmark(&spec)?;
        for s in &report.summaries {
            rows.push(SweepRow {
                agents: n,
                algorithm: s.algorithm,
                instances: s.instances,
                successes: s.successes,
                success_rate: s.success_rate,
                median_timesteps: s.timesteps.as_ref().map(|b| b.median),
                median_wall_ms: s.wall_ms.as_ref().map_or(0.0, |b| b.median),
                mean_wall_ms: s.mean_wall_ms,
            });
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<(), BenchError> {
    let file = File::create(path).map_err(BenchError::io(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let csv_err = |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    };
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(BenchError::io(path))?;
    w.into_inner()
        .map_err(|e| BenchError::io(path)(e.into_error()))?
        .flush()
        .map_err(BenchError::io(path))
}
