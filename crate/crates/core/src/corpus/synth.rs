//! Synthetic parallel data.
//!
//! The "translation" of a source sentence is a fixed token permutation applied
//! position by position. A pair generated at corruption rate `r` has each
//! target token independently replaced by a uniformly random token with
//! probability `r`. Source tokens are uniform, or Zipf-distributed over token
//! ids when `source_skew` is positive.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{PairId, SentencePair, Token};
use crate::error::{Error, Result};
use crate::seed::{SeedTree, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub n_pairs: usize,
    pub vocab_size: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Corruption rates; pairs are split evenly across them.
    pub noise_levels: Vec<f64>,
    pub seed: u64,
    /// Zipf exponent of the source-token distribution; 0 is uniform.
    #[serde(default)]
    pub source_skew: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_pairs: 6000,
            vocab_size: 64,
            min_len: 6,
            max_len: 12,
            noise_levels: vec![0.0, 0.1, 0.2, 0.4, 0.6, 0.8],
            seed: 1,
            source_skew: 0.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size == 0 {
            return Err(Error::Config("vocabulary must be non-empty".into()));
        }
        if self.noise_levels.is_empty() {
            return Err(Error::Config("at least one noise level is required".into()));
        }
        if let Some(r) = self.noise_levels.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::Config(format!("noise level {r} outside [0, 1]")));
        }
        if self.n_pairs < self.noise_levels.len() {
            return Err(Error::Config(format!(
                "{} pairs cannot cover {} noise levels",
                self.n_pairs,
                self.noise_levels.len()
            )));
        }
        if !(self.source_skew.is_finite() && self.source_skew >= 0.0) {
            return Err(Error::Config(format!(
                "source skew {} must be finite and >= 0",
                self.source_skew
            )));
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(Error::Config(format!(
                "invalid length range {}..={}",
                self.min_len, self.max_len
            )));
        }
        Ok(())
    }
}

/// A generated corpus plus the splits needed to score and evaluate it.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub corpus: Vec<SentencePair>,
    /// Lowest-noise corpus pairs used to fine-tune the trusted scorer.
    pub trusted_ids: Vec<PairId>,
    /// Clean held-out pairs, ids following the corpus.
    pub dev: Vec<SentencePair>,
}

struct Generator {
    permutation: Vec<Token>,
    source_dist: Option<WeightedIndex<f64>>,
    vocab_size: usize,
    min_len: usize,
    max_len: usize,
}

impl Generator {
    fn new<R: Rng>(cfg: &SynthConfig, rng: &mut R) -> Self {
        let mut permutation: Vec<Token> = (0..cfg.vocab_size as Token).collect();
        permutation.shuffle(rng);
        let source_dist = (cfg.source_skew > 0.0).then(|| {
            let weights = (1..=cfg.vocab_size).map(|r| (r as f64).powf(-cfg.source_skew));
            WeightedIndex::new(weights).expect("positive weights")
        });
        Self {
            permutation,
            source_dist,
            vocab_size: cfg.vocab_size,
            min_len: cfg.min_len,
            max_len: cfg.max_len,
        }
    }

    fn pair<R: Rng>(&self, id: PairId, rate: f64, rng: &mut R) -> SentencePair {
        let len = rng.gen_range(self.min_len..=self.max_len);
        let source: Vec<Token> = (0..len)
            .map(|_| match &self.source_dist {
                Some(d) => d.sample(rng) as Token,
                None => rng.gen_range(0..self.vocab_size) as Token,
            })
            .collect();
        let target = source
            .iter()
            .map(|&s| {
                if rng.gen_bool(rate) {
                    rng.gen_range(0..self.vocab_size) as Token
                } else {
                    self.permutation[s as usize]
                }
            })
            .collect();
        SentencePair {
            noise_truth: Some(rate),
            ..SentencePair::new(id, source, target)
        }
    }
}

pub fn generate_synthetic_corpus(cfg: &SynthConfig) -> Result<Vec<SentencePair>> {
    cfg.validate()?;
    let mut rng = SeedTree::new(cfg.seed).rng(Stream::Corpus);
    let gen = Generator::new(cfg, &mut rng);
    // Equal counts per level, remainder to the first levels, shuffled over ids.
    let levels = cfg.noise_levels.len();
    let mut assignment: Vec<f64> = (0..cfg.n_pairs)
        .map(|i| cfg.noise_levels[i % levels])
        .collect();
    assignment.shuffle(&mut rng);
    Ok(assignment
        .into_iter()
        .enumerate()
        .map(|(id, rate)| gen.pair(id as PairId, rate, &mut rng))
        .collect())
}

/// Corpus from [`generate_synthetic_corpus`] plus a trusted subset and a clean
/// dev set drawn from the same permutation.
pub fn generate_synthetic_data(
    cfg: &SynthConfig,
    trusted_size: usize,
    dev_size: usize,
) -> Result<SyntheticData> {
    let corpus = generate_synthetic_corpus(cfg)?;
    let cleanest = cfg
        .noise_levels
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let trusted_ids: Vec<PairId> = corpus
        .iter()
        .filter(|p| p.noise_truth == Some(cleanest))
        .take(trusted_size)
        .map(|p| p.id)
        .collect();
    if trusted_ids.len() < trusted_size {
        return Err(Error::Config(format!(
            "only {} pairs at the cleanest level, {trusted_size} trusted requested",
            trusted_ids.len()
        )));
    }
    let mut rng = SeedTree::new(cfg.seed).rng(Stream::Corpus);
    // re-derive the same permutation, then draw dev pairs on their own stream
    let gen = Generator::new(cfg, &mut rng);
    let mut dev_rng = SeedTree::new(cfg.seed).rng(Stream::Dev);
    let dev = (0..dev_size)
        .map(|i| gen.pair((cfg.n_pairs + i) as PairId, 0.0, &mut dev_rng))
        .collect();
    Ok(SyntheticData {
        corpus,
        trusted_ids,
        dev,
    })
}
