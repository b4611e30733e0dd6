//! Scored parallel data: synthetic generation, contrastive scoring, equal-size
//! noise bins and the prototype batch used for observations.

mod bins;
mod cds;
mod stats;
mod synth;
mod tsv;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bins::{bin_corpus, prototype_batch, sample_minibatch, BinnedCorpus, PrototypeBatch};
pub use cds::{cds_score, score_corpus, ScorerConfig};
pub use stats::{clean_vs_noisy_auc, roc_auc, spearman};
pub use synth::{generate_synthetic_corpus, generate_synthetic_data, SynthConfig, SyntheticData};
pub use tsv::{apply_scores, read_corpus_tsv, read_score_tsv, write_corpus_tsv, write_score_tsv};

pub type PairId = u64;
pub type Token = u32;

/// One training example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentencePair {
    pub id: PairId,
    pub source: Vec<Token>,
    pub target: Vec<Token>,
    /// Contrastive score; higher is cleaner.
    pub score: Option<f64>,
    /// Corruption rate the pair was generated with. Evaluation only.
    pub noise_truth: Option<f64>,
}

impl SentencePair {
    pub fn new(id: PairId, source: Vec<Token>, target: Vec<Token>) -> Self {
        Self {
            id,
            source,
            target,
            score: None,
            noise_truth: None,
        }
    }

    pub fn validate(&self, vocab_size: usize) -> Result<()> {
        if self.source.is_empty() || self.target.is_empty() {
            return Err(Error::Data(format!("pair {} has an empty side", self.id)));
        }
        if let Some(&t) = self
            .source
            .iter()
            .chain(&self.target)
            .find(|&&t| t as usize >= vocab_size)
        {
            return Err(Error::Data(format!(
                "pair {}: token {t} outside vocabulary of {vocab_size}",
                self.id
            )));
        }
        Ok(())
    }

    /// Source position aligned with target position `j`.
    pub fn aligned_source(&self, j: usize) -> Token {
        self.source[j * self.source.len() / self.target.len()]
    }
}

pub fn validate_pairs(pairs: &[SentencePair], vocab_size: usize) -> Result<()> {
    let mut seen = HashSet::with_capacity(pairs.len());
    for p in pairs {
        p.validate(vocab_size)?;
        if !seen.insert(p.id) {
            return Err(Error::Data(format!("duplicate pair id {}", p.id)));
        }
    }
    Ok(())
}

/// Held-out pairs the reward and checkpoint selection are measured on.
#[derive(Debug, Clone, PartialEq)]
pub struct DevSet {
    pairs: Vec<SentencePair>,
}

impl DevSet {
    /// Rejects an empty set or any id shared with the training corpus.
    pub fn new(pairs: Vec<SentencePair>, training: &[SentencePair]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Data("dev set is empty".into()));
        }
        let train_ids: HashSet<_> = training.iter().map(|p| p.id).collect();
        if let Some(p) = pairs.iter().find(|p| train_ids.contains(&p.id)) {
            return Err(Error::Data(format!(
                "dev pair {} also appears in the training corpus",
                p.id
            )));
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[SentencePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}
