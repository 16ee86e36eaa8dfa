use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::BenchError;
use crate::spec::Algorithm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Success,
    Timeout,
    Infeasible,
    /// A policy run that hit the step cap.
    Truncated,
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::Success => "success",
            RunStatus::Timeout => "timeout",
            RunStatus::Infeasible => "infeasible",
            RunStatus::Truncated => "truncated",
        })
    }
}

/// One algorithm on one instance. `timesteps` and `sum_of_costs` are
/// present exactly when the run succeeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub status: RunStatus,
    pub timesteps: Option<usize>,
    pub sum_of_costs: Option<usize>,
    pub wall_ms: f64,
    pub collisions: usize,
    pub deadlock: bool,
}

impl RunRecord {
    pub fn is_success(&self) -> bool {
        self.status == RunStatus::Success
    }

    /// Equality ignoring wall time, which is the only field that varies
    /// between identical runs.
    pub fn same_outcome(&self, other: &RunRecord) -> bool {
        RunRecord {
            wall_ms: 0.0,
            ..self.clone()
        } == RunRecord {
            wall_ms: 0.0,
            ..other.clone()
        }
    }
}

pub const CSV_HEADER: [&str; 9] = [
    "instance",
    "seed",
    "algorithm",
    "status",
    "timesteps",
    "sum_of_costs",
    "wall_ms",
    "collisions",
    "deadlock",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl FromStr for ExportFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(BenchError::Config(format!("unknown export format {other:?}"))),
        }
    }
}

impl ExportFormat {
    /// Guess from the file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => ExportFormat::Json,
            _ => ExportFormat::Csv,
        }
    }
}

pub fn write_records_csv<W: Write>(records: &[RunRecord], writer: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(reader: R) -> Result<Vec<RunRecord>, csv::Error> {
    csv::Reader::from_reader(reader).deserialize().collect()
}

pub fn export_results(records: &[RunRecord], format: ExportFormat, path: &Path) -> Result<(), BenchError> {
    let file = File::create(path).map_err(BenchError::io(path))?;
    let mut out = BufWriter::new(file);
    match format {
        ExportFormat::Csv => write_records_csv(records, &mut out).map_err(|source| BenchError::Csv {
            path: path.to_path_buf(),
            source,
        })?,
        ExportFormat::Json => serde_json::to_writer_pretty(&mut out, records).map_err(|source| BenchError::Json {
            path: path.to_path_buf(),
            source,
        })?,
    }
    out.flush().map_err(BenchError::io(path))
}

pub fn import_results(path: &Path) -> Result<Vec<RunRecord>, BenchError> {
    let file = File::open(path).map_err(BenchError::io(path))?;
    match ExportFormat::from_path(path) {
        ExportFormat::Csv => read_records_csv(file).map_err(|source| BenchError::Csv {
            path: path.to_path_buf(),
            source,
        }),
        ExportFormat::Json => serde_json::from_reader(file).map_err(|source| BenchError::Json {
            path: path.to_path_buf(),
            source,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<RunRecord> {
        vec![
            RunRecord {
                instance: 0,
                seed: 42,
                algorithm: Algorithm::Cbs,
                status: RunStatus::Success,
                timesteps: Some(12),
                sum_of_costs: Some(31),
                wall_ms: 3.25,
                collisions: 0,
                deadlock: false,
            },
            RunRecord {
                instance: 1,
                seed: 43,
                algorithm: Algorithm::Random,
                status: RunStatus::Truncated,
                timesteps: None,
                sum_of_costs: None,
                wall_ms: 0.1 + 0.2,
                collisions: 17,
                deadlock: true,
            },
        ]
    }

    #[test]
    fn empty_csv_is_header_only() {
        let mut out = Vec::new();
        write_records_csv(&[], &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "instance,seed,algorithm,status,timesteps,sum_of_costs,wall_ms,collisions,deadlock\n"
        );
    }

    #[test]
    fn csv_round_trip() {
        let mut out = Vec::new();
        write_records_csv(&sample(), &mut out).unwrap();
        let text = String::from_utf8(out.clone()).unwrap();
        assert!(text.contains("1,43,random,truncated,,,"), "{text}");
        assert_eq!(read_records_csv(&out[..]).unwrap(), sample());
    }

    #[test]
    fn file_round_trip_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["r.csv", "r.json"] {
            let path = dir.path().join(name);
            export_results(&sample(), ExportFormat::from_path(&path), &path).unwrap();
            assert_eq!(import_results(&path).unwrap(), sample());
        }
    }

    #[test]
    fn io_errors_name_the_path() {
        let err = export_results(&sample(), ExportFormat::Csv, Path::new("/nonexistent/dir/out.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/out.csv"));
    }
}
