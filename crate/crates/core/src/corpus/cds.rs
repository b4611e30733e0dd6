//! Contrastive data selection scores.
//!
//! A scorer is trained on the whole (noisy) corpus, copied, and the copy is
//! fine-tuned on a small trusted subset. A pair's score is its per-token
//! log-likelihood under the fine-tuned copy minus that under the original:
//! pairs the trusted data made more likely are cleaner.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{PairId, SentencePair};
use crate::error::{Error, Result};
use crate::learner::{Learner, LearnerConfig};
use crate::seed::{SeedTree, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScorerConfig {
    pub learner: LearnerConfig,
    /// Steps on the full corpus.
    pub noisy_steps: usize,
    /// Further steps on the trusted subset.
    pub finetune_steps: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        Self {
            learner: LearnerConfig::default(),
            noisy_steps: 1500,
            finetune_steps: 300,
            batch_size: 32,
            seed: 1,
        }
    }
}

pub fn cds_score(pair: &SentencePair, trusted: &Learner, noisy: &Learner) -> Result<f64> {
    let c = trusted.sentence_log_likelihoods(&[pair])?[0];
    let n = noisy.sentence_log_likelihoods(&[pair])?[0];
    Ok(c - n)
}

fn train_uniform<R: Rng>(
    learner: &mut Learner,
    pool: &[&SentencePair],
    steps: usize,
    batch_size: usize,
    rng: &mut R,
) -> Result<()> {
    for _ in 0..steps {
        let batch: Vec<&SentencePair> = (0..batch_size)
            .map(|_| pool[rng.gen_range(0..pool.len())])
            .collect();
        learner.train_step(&batch)?;
    }
    Ok(())
}

/// Trains the noisy and trusted scorers and returns the corpus with every
/// score filled in. Input order is preserved.
pub fn score_corpus(
    corpus: &[SentencePair],
    trusted_ids: &[PairId],
    cfg: &ScorerConfig,
) -> Result<Vec<SentencePair>> {
    if trusted_ids.is_empty() {
        return Err(Error::Config("trusted subset is empty".into()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Config("scorer batch size must be positive".into()));
    }
    if corpus.is_empty() {
        return Err(Error::Data("cannot score an empty corpus".into()));
    }
    let wanted: HashSet<PairId> = trusted_ids.iter().copied().collect();
    let trusted: Vec<&SentencePair> = corpus.iter().filter(|p| wanted.contains(&p.id)).collect();
    if trusted.len() != wanted.len() {
        return Err(Error::Config(format!(
            "{} trusted ids are not in the corpus",
            wanted.len() - trusted.len()
        )));
    }
    let all: Vec<&SentencePair> = corpus.iter().collect();

    let seeds = SeedTree::new(cfg.seed);
    let mut noisy = Learner::new(cfg.learner.clone(), &mut seeds.rng(Stream::TraineeInit))?;
    let mut rng = seeds.rng(Stream::Scorer);
    train_uniform(&mut noisy, &all, cfg.noisy_steps, cfg.batch_size, &mut rng)?;
    let mut clean = noisy.clone();
    train_uniform(
        &mut clean,
        &trusted,
        cfg.finetune_steps,
        cfg.batch_size,
        &mut rng,
    )?;

    let c = clean.sentence_log_likelihoods(&all)?;
    let n = noisy.sentence_log_likelihoods(&all)?;
    Ok(corpus
        .iter()
        .zip(c.iter().zip(&n))
        .map(|(p, (c, n))| SentencePair {
            score: Some(c - n),
            ..p.clone()
        })
        .collect())
}
