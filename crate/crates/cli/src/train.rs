use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use currl_core::corpus::{apply_scores, read_score_tsv};
use currl_core::curricula::Registry;
use currl_core::orchestrator::{
    run_experiment, select_best_run, RunConfig, RunOptions, RunReport, Testbed,
};
use serde::{Deserialize, Serialize};

use crate::data::{DataDir, SCORES};
use crate::usage;

/// One experiment: a run config plus where its inputs and outputs live.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub run: RunConfig,
    pub data_dir: Option<PathBuf>,
    /// Score cache; defaults to `scores.tsv` in the data directory.
    pub scores: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    /// Name of the output subdirectory and report row.
    pub label: Option<String>,
    /// Root seeds to run; `[run.seed]` when empty.
    pub seeds: Vec<u64>,
}

/// Per-experiment result: every seed plus the selected best run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub label: String,
    pub best_seed: u64,
    pub runs: Vec<RunReport>,
    pub best: RunReport,
}

pub const SUMMARY: &str = "summary.json";

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// JSON experiment config; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Data directory written by `gen`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Score cache written by `score`.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Output directory; results go to `<out>/<label>/`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub label: Option<String>,
    /// Curriculum kind.
    #[arg(long)]
    pub policy: Option<String>,
    /// Number of seeds, counting up from the root seed.
    #[arg(long)]
    pub seeds: Option<u64>,
    /// Root seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fraction of cleanest bins kept by `filtered`.
    #[arg(long)]
    pub keep: Option<f64>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub warmup: Option<u64>,
    #[arg(long)]
    pub eval_every: Option<u64>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Prototype pairs per bin.
    #[arg(long)]
    pub prototype: Option<usize>,
    /// Reward 1 for the cleanest bin and 0 otherwise.
    #[arg(long)]
    pub ablate_reward: bool,
    /// Feed the agent a constant vector of ones.
    #[arg(long)]
    pub ablate_observation: bool,
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Defaults, then the config file, then flags.
pub fn resolve(args: &TrainArgs) -> Result<ExperimentConfig> {
    let mut exp = match &args.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    let run = &mut exp.run;
    if let Some(d) = &args.data {
        exp.data_dir = Some(d.clone());
    }
    if let Some(s) = &args.scores {
        exp.scores = Some(s.clone());
    }
    if let Some(o) = &args.out {
        exp.output_dir = Some(o.clone());
    }
    if let Some(l) = &args.label {
        exp.label = Some(l.clone());
    }
    if let Some(k) = &args.policy {
        run.policy.kind = k.clone();
    }
    if let Some(s) = args.seed {
        run.seed = s;
    }
    if let Some(n) = args.seeds {
        if n == 0 {
            return Err(usage("--seeds must be >= 1"));
        }
        exp.seeds = (0..n).map(|k| run.seed + k).collect();
    }
    if let Some(f) = args.keep {
        run.policy.keep_fraction = f;
    }
    if let Some(n) = args.steps {
        run.total_steps = n;
    }
    if let Some(n) = args.warmup {
        run.nmt_warmup_steps = n;
    }
    if let Some(n) = args.eval_every {
        run.eval_every = n;
    }
    if let Some(n) = args.bins {
        run.num_bins = n;
    }
    if let Some(n) = args.prototype {
        run.prototype_size = n;
    }
    run.policy.fixed_reward |= args.ablate_reward;
    run.policy.fixed_observation |= args.ablate_observation;
    if exp.seeds.is_empty() {
        exp.seeds = vec![exp.run.seed];
    }
    Ok(exp)
}

fn default_label(run: &RunConfig) -> String {
    let mut label = run.policy.kind.clone();
    if run.policy.kind == "filtered" {
        label.push_str(&format!("_{}", run.policy.keep_fraction));
    }
    if run.policy.fixed_reward {
        label.push_str("+fixed_reward");
    }
    if run.policy.fixed_observation {
        label.push_str("+fixed_observation");
    }
    label
}

pub fn run(args: TrainArgs) -> Result<()> {
    let mut exp = resolve(&args)?;
    let registry = Registry::builtin();
    if !registry.contains(&exp.run.policy.kind) {
        return Err(usage(format!(
            "unknown policy kind '{}'; valid kinds: {}",
            exp.run.policy.kind,
            registry.names().join(", ")
        )));
    }
    let data_dir = exp
        .data_dir
        .clone()
        .ok_or_else(|| usage("no data directory; pass --data or set data_dir"))?;
    let out_root = exp
        .output_dir
        .clone()
        .ok_or_else(|| usage("no output directory; pass --out or set output_dir"))?;
    let dir = DataDir::new(&data_dir)?;
    if let Some(v) = dir.vocab_size()? {
        exp.run.learner.vocab_size = v;
    }
    exp.run.validate()?;
    let label = exp.label.clone().unwrap_or_else(|| default_label(&exp.run));
    exp.label = Some(label.clone());

    let scores_path = exp.scores.clone().unwrap_or_else(|| dir.path(SCORES));
    if !scores_path.exists() {
        return Err(usage(format!(
            "score cache {} not found; run `currl score` first",
            scores_path.display()
        )));
    }
    let mut corpus = dir.corpus()?;
    apply_scores(&mut corpus, &read_score_tsv(&scores_path)?)?;
    let testbed = Testbed::new(
        &corpus,
        dir.dev()?,
        exp.run.num_bins,
        exp.run.prototype_size,
    )?;

    let out = out_root.join(&label);
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(
        out.join("experiment.json"),
        serde_json::to_string_pretty(&exp)? + "\n",
    )
    .context("writing experiment.json")?;

    let mut reports = Vec::new();
    for &seed in &exp.seeds {
        let config = RunConfig {
            seed,
            ..exp.run.clone()
        };
        let seed_dir = out.join(format!("seed-{seed}"));
        let options = RunOptions {
            checkpoint_dir: Some(seed_dir.join("checkpoints")),
        };
        let outcome = run_experiment(&config, &testbed, &options)?;
        outcome.write_artifacts(&seed_dir, config.heatmap_bucket)?;
        let r = &outcome.report;
        println!(
            "{label} seed {seed}: final dev LL {:.5}, best {:.5} at step {}",
            r.final_dev_ll, r.best_dev_ll, r.best_step
        );
        reports.push(outcome.report);
    }
    let best = select_best_run(&reports)?.clone();
    println!(
        "best seed: {} (checkpoint {})",
        best.seed,
        best.best_checkpoint.as_deref().unwrap_or("-")
    );
    let summary = Summary {
        label,
        best_seed: best.seed,
        runs: reports,
        best,
    };
    let path = out.join(SUMMARY);
    fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
