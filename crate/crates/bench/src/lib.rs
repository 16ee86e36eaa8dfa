//! Benchmark harness for the grid MAPF engine.
//!
//! Instance `i` of a run uses seed `base_seed + i` for its tasks. Planners
//! (MA-A*, CBS) are solved under a budget and their plans replayed through
//! the episode engine; policies (random, external) are rolled out directly.
//! Results come back as per-run records, per-algorithm summaries and visit
//! heat maps, merged in instance order regardless of the worker count.

pub mod error;
pub mod external;
pub mod heatmap;
pub mod record;
pub mod run;
pub mod spec;
pub mod summary;
pub mod sweep;

pub use error::BenchError;
pub use heatmap::{accumulate_heatmap, render_heatmap, HeatMap, HeatMapFormat};
pub use record::{export_results, import_results, ExportFormat, RunRecord, RunStatus};
pub use run::{instance_tasks, replay_solution, run_benchmark, run_instance, BenchReport, RunOutcome};
pub use spec::{base_seed_from_env, parse_algorithms, Algorithm, BenchmarkSpec, DEFAULT_BASE_SEED};
pub use summary::{summarize, BoxStats, Summary};
pub use sweep::{parse_agent_range, scalability_sweep, write_sweep_csv, SweepRow};
