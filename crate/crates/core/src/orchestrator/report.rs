use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One record per trainee step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub step: u64,
    pub bin: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub train_loss: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dev_ll: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_loss: Option<f64>,
    pub replay_size: usize,
}

/// Identifies the run that produced an output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHeader {
    pub config_hash: String,
    pub testbed_hash: String,
    pub policy: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config_hash: String,
    pub testbed_hash: String,
    pub policy: String,
    pub seed: u64,
    pub total_steps: u64,
    pub initial_dev_ll: f64,
    pub final_dev_ll: f64,
    pub best_dev_ll: f64,
    pub best_step: u64,
    /// Id of the saved checkpoint with the best dev log-likelihood.
    pub best_checkpoint: Option<String>,
    /// Transitions still waiting for a reward when the run ended.
    pub dropped_pending: usize,
    pub transitions: usize,
    pub q_updates: u64,
    pub target_syncs: u64,
}

impl RunReport {
    pub fn header(&self) -> FileHeader {
        FileHeader {
            config_hash: self.config_hash.clone(),
            testbed_hash: self.testbed_hash.clone(),
            policy: self.policy.clone(),
            seed: self.seed,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_slice(&text)?)
    }
}

/// The report with the highest best dev log-likelihood, ties to the lowest
/// seed.
pub fn select_best_run(reports: &[RunReport]) -> Result<&RunReport> {
    reports
        .iter()
        .reduce(|best, r| match r.best_dev_ll.total_cmp(&best.best_dev_ll) {
            std::cmp::Ordering::Greater => r,
            std::cmp::Ordering::Equal if r.seed < best.seed => r,
            _ => best,
        })
        .ok_or_else(|| Error::Usage("no run reports to choose from".into()))
}

/// Header line followed by one JSON object per row.
pub fn metrics_jsonl(header: &FileHeader, rows: &[MetricsRow]) -> Result<String> {
    let mut out = serde_json::to_string(header)?;
    out.push('\n');
    for row in rows {
        out.push_str(&serde_json::to_string(row)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_metrics_jsonl(path: &Path, header: &FileHeader, rows: &[MetricsRow]) -> Result<()> {
    fs::write(path, metrics_jsonl(header, rows)?).map_err(|e| Error::io(path, e))
}

/// Chosen bin per trainee step.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PolicyTrace {
    pub num_bins: usize,
    pub actions: Vec<usize>,
}

impl PolicyTrace {
    pub fn new(num_bins: usize) -> Self {
        Self {
            num_bins,
            actions: Vec::new(),
        }
    }

    /// Share of steps in `range` that chose `bin`.
    pub fn selection_rate(&self, bin: usize, range: std::ops::Range<usize>) -> f64 {
        let slice = &self.actions[range];
        if slice.is_empty() {
            return 0.0;
        }
        slice.iter().filter(|&&a| a == bin).count() as f64 / slice.len() as f64
    }
}

/// `heatmap[bin][column]`: share of the steps in each bucket that chose `bin`.
pub fn policy_heatmap(trace: &PolicyTrace, bucket: u64) -> Result<Vec<Vec<f64>>> {
    if bucket == 0 {
        return Err(Error::Config("heatmap bucket must be >= 1".into()));
    }
    let bucket = bucket as usize;
    let columns = trace.actions.len().div_ceil(bucket);
    let mut map = vec![vec![0.0; columns]; trace.num_bins];
    for (c, chunk) in trace.actions.chunks(bucket).enumerate() {
        let mut counts = vec![0usize; trace.num_bins];
        for &a in chunk {
            if a >= trace.num_bins {
                return Err(Error::Action {
                    bin: a,
                    num_bins: trace.num_bins,
                });
            }
            counts[a] += 1;
        }
        for (row, n) in map.iter_mut().zip(counts) {
            row[c] = n as f64 / chunk.len() as f64;
        }
    }
    Ok(map)
}

/// Rows are bins (0 = noisiest); columns are labelled by their first step.
pub fn heatmap_csv(header: &FileHeader, heatmap: &[Vec<f64>], bucket: u64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# config_hash={}", header.config_hash);
    let _ = writeln!(out, "# testbed_hash={}", header.testbed_hash);
    let _ = writeln!(out, "# policy={} seed={}", header.policy, header.seed);
    let columns = heatmap.first().map_or(0, Vec::len);
    out.push_str("bin");
    for c in 0..columns {
        let _ = write!(out, ",{}", c as u64 * bucket);
    }
    out.push('\n');
    for (b, row) in heatmap.iter().enumerate() {
        let _ = write!(out, "{b}");
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}
