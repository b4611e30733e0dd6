use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use currl_core::corpus::{
    clean_vs_noisy_auc, score_corpus, spearman, write_score_tsv, ScorerConfig,
};
use currl_core::orchestrator::config_hash;

use crate::data::{DataDir, SCORES};

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Data directory written by `gen`.
    #[arg(long)]
    pub data: PathBuf,
    /// Score cache path; defaults to `scores.tsv` in the data directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON scorer config; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub noisy_steps: Option<usize>,
    #[arg(long)]
    pub finetune_steps: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn run(args: ScoreArgs) -> Result<()> {
    let dir = DataDir::new(&args.data)?;
    let mut cfg: ScorerConfig = match &args.config {
        Some(p) => {
            let text = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_slice(&text)
                .map_err(|e| crate::usage(format!("{}: {e}", p.display())))?
        }
        None => ScorerConfig::default(),
    };
    if let Some(v) = dir.vocab_size()? {
        cfg.learner.vocab_size = v;
    }
    if let Some(n) = args.noisy_steps {
        cfg.noisy_steps = n;
    }
    if let Some(n) = args.finetune_steps {
        cfg.finetune_steps = n;
    }
    if let Some(n) = args.batch {
        cfg.batch_size = n;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.learner.validate()?;

    let corpus = dir.corpus()?;
    let trusted: Vec<_> = dir.trusted()?.iter().map(|p| p.id).collect();
    let scored = score_corpus(&corpus, &trusted, &cfg)?;
    let out = args.out.unwrap_or_else(|| dir.path(SCORES));
    let comment = format!("config_hash={}", config_hash(&cfg));
    write_score_tsv(&out, &scored, &[&comment])?;
    println!("wrote {} scores to {}", scored.len(), out.display());

    if let Some(auc) = clean_vs_noisy_auc(&scored) {
        println!("clean-vs-noisy AUC: {auc:.4}");
    }
    let (s, clean): (Vec<f64>, Vec<f64>) = scored
        .iter()
        .filter_map(|p| Some((p.score?, 1.0 - p.noise_truth?)))
        .unzip();
    if let Some(rho) = spearman(&s, &clean) {
        println!("spearman(score, 1 - corruption): {rho:.4}");
    }
    Ok(())
}
