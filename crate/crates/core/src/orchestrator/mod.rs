//! The training loop: trainee steps, observations, delayed rewards, agent
//! updates, metrics and checkpoints.

mod config;
mod report;
mod reward;
mod run;

pub use config::{config_hash, Attribution, EpsilonConfig, RewardConfig, RunConfig};
pub use report::{
    heatmap_csv, metrics_jsonl, policy_heatmap, select_best_run, write_metrics_jsonl, FileHeader,
    MetricsRow, PolicyTrace, RunReport,
};
pub use reward::{
    flush_attributed, flush_pending, flush_with, PendingBuffer, PendingEntry, RewardTracker,
};
pub use run::{run_experiment, run_experiment_with, RunOptions, RunOutcome, Testbed};
