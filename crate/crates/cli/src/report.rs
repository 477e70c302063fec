//! Machine-readable run and benchmark reports (JSON, schema-versioned).

use serde::{Deserialize, Serialize};
use tilejoin::{JoinConfig, JoinStats};

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n: usize,
    pub d: usize,
    pub source: String,
    pub checksum: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSummary {
    pub total_pairs: u64,
    pub selectivity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub config: JoinConfig,
    pub dataset: DatasetSummary,
    pub result: ResultSummary,
    pub stats: JoinStats,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serializable")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub epsilon: f64,
    pub kernel: String,
    pub times_secs: Vec<f64>,
    pub median_secs: f64,
    pub total_pairs: u64,
    pub selectivity: f64,
    /// Candidate pairs refined per second, from the median run.
    pub candidates_per_sec: f64,
    pub pairs_per_sec: f64,
    pub chunks_skipped: u64,
    /// Scalar median time over this row's median time at the same epsilon.
    pub speedup_vs_scalar: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub format_version: u32,
    pub dataset: DatasetSummary,
    pub repeats: usize,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "epsilon,kernel,median_secs,total_pairs,selectivity,candidates_per_sec,pairs_per_sec,chunks_skipped,speedup_vs_scalar\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:?},{},{:?},{},{:?},{:?},{:?},{},{}\n",
                r.epsilon,
                r.kernel,
                r.median_secs,
                r.total_pairs,
                r.selectivity,
                r.candidates_per_sec,
                r.pairs_per_sec,
                r.chunks_skipped,
                r.speedup_vs_scalar.map(|v| format!("{v:?}")).unwrap_or_default()
            ));
        }
        out
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AggregateError {
    #[error("no runs to aggregate")]
    Empty,
    #[error("runs disagree on {0}")]
    Mismatched(&'static str),
    #[error("unsupported report format version {0}")]
    Version(u32),
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Folds repeated runs of one (epsilon, kernel) configuration into a row.
/// Works on reports produced by `join` as well as by `bench`.
pub fn aggregate_runs(runs: &[RunReport]) -> Result<BenchRow, AggregateError> {
    let first = runs.first().ok_or(AggregateError::Empty)?;
    for r in runs {
        if r.format_version != REPORT_FORMAT_VERSION {
            return Err(AggregateError::Version(r.format_version));
        }
        if r.config.epsilon != first.config.epsilon {
            return Err(AggregateError::Mismatched("epsilon"));
        }
        if r.stats.kernel != first.stats.kernel {
            return Err(AggregateError::Mismatched("kernel"));
        }
        if r.dataset.checksum != first.dataset.checksum {
            return Err(AggregateError::Mismatched("dataset"));
        }
        if r.result.total_pairs != first.result.total_pairs {
            return Err(AggregateError::Mismatched("total_pairs"));
        }
    }
    let times: Vec<f64> = runs.iter().map(|r| r.stats.total_secs).collect();
    let median_secs = median(&times);
    let closest = runs
        .iter()
        .min_by(|a, b| {
            (a.stats.total_secs - median_secs)
                .abs()
                .total_cmp(&(b.stats.total_secs - median_secs).abs())
        })
        .unwrap();
    Ok(BenchRow {
        epsilon: first.config.epsilon,
        kernel: first.stats.kernel.clone(),
        times_secs: times,
        median_secs,
        total_pairs: first.result.total_pairs,
        selectivity: first.result.selectivity,
        candidates_per_sec: closest.stats.candidates_per_sec,
        pairs_per_sec: closest.stats.pairs_per_sec,
        chunks_skipped: closest.stats.work.chunks_skipped,
        speedup_vs_scalar: None,
    })
}

/// Fills `speedup_vs_scalar` for every row that has a scalar row at the
/// same epsilon.
pub fn attach_speedups(rows: &mut [BenchRow]) {
    let scalar: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.kernel == "scalar")
        .map(|r| (r.epsilon, r.median_secs))
        .collect();
    for row in rows.iter_mut() {
        row.speedup_vs_scalar = scalar
            .iter()
            .find(|(e, _)| *e == row.epsilon)
            .map(|(_, t)| t / row.median_secs);
    }
}
