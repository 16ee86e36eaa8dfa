use serde::{Deserialize, Serialize};

use crate::record::RunRecord;
use crate::spec::Algorithm;

/// Box-plot statistics. Quantiles interpolate linearly between order
/// statistics; whiskers reach the most extreme samples within 1.5 IQR of
/// the quartiles and anything beyond is an outlier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl BoxStats {
    pub fn from_samples(samples: &[f64]) -> Option<BoxStats> {
        if samples.is_empty() {
            return None;
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q1 = quantile(&sorted, 0.25);
        let q3 = quantile(&sorted, 0.75);
        let iqr = q3 - q1;
        let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        let inside = sorted.iter().copied().filter(|&v| v >= lo_fence && v <= hi_fence);
        let whisker_low = inside.clone().fold(f64::INFINITY, f64::min);
        let whisker_high = inside.fold(f64::NEG_INFINITY, f64::max);
        Some(BoxStats {
            min: sorted[0],
            q1,
            median: quantile(&sorted, 0.5),
            q3,
            max: sorted[sorted.len() - 1],
            whisker_low,
            whisker_high,
            outliers: sorted.iter().copied().filter(|&v| v < lo_fence || v > hi_fence).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub algorithm: Algorithm,
    pub instances: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Over successful runs only.
    pub timesteps: Option<BoxStats>,
    pub wall_ms: Option<BoxStats>,
    pub mean_wall_ms: f64,
    pub deadlocks: usize,
}

/// Summary of one algorithm's records.
pub fn summarize(algorithm: Algorithm, records: &[RunRecord]) -> Summary {
    let mine: Vec<&RunRecord> = records.iter().filter(|r| r.algorithm == algorithm).collect();
    let successes = mine.iter().filter(|r| r.is_success()).count();
    let timesteps: Vec<f64> = mine.iter().filter_map(|r| r.timesteps).map(|t| t as f64).collect();
    let walls: Vec<f64> = mine.iter().map(|r| r.wall_ms).collect();
    Summary {
        algorithm,
        instances: mine.len(),
        successes,
        success_rate: if mine.is_empty() { 0.0 } else { successes as f64 / mine.len() as f64 },
        timesteps: BoxStats::from_samples(&timesteps),
        wall_ms: BoxStats::from_samples(&walls),
        mean_wall_ms: if walls.is_empty() { 0.0 } else { walls.iter().sum::<f64>() / walls.len() as f64 },
        deadlocks: mine.iter().filter(|r| r.deadlock).count(),
    }
}
