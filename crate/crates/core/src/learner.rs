//! The trainee: a per-position translation proxy.
//!
//! Each target token is predicted from the embedding of its aligned source
//! token through a small MLP head over the vocabulary. Predictions depend on
//! the source token only, so a batch is evaluated by grouping positions per
//! distinct source token.

use std::borrow::Borrow;
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{SentencePair, Token};
use crate::error::{Error, Result};
use crate::neural::{
    read_params, softmax, write_params, Mlp, ParamHeader, Parameters, RmsProp, RmsPropConfig,
    TensorSpec, PROB_FLOOR,
};

pub use crate::corpus::DevSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub optimizer: RmsPropConfig,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            vocab_size: 64,
            embed_dim: 16,
            hidden_dims: vec![32],
            optimizer: RmsPropConfig {
                learning_rate: 0.01,
                ..RmsPropConfig::default()
            },
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size == 0 || self.embed_dim == 0 {
            return Err(Error::Config(
                "learner vocabulary and embedding sizes must be positive".into(),
            ));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::Config("zero-width learner hidden layer".into()));
        }
        self.optimizer.validate()
    }

    fn head_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.embed_dim];
        dims.extend(&self.hidden_dims);
        dims.push(self.vocab_size);
        dims
    }
}

#[derive(Debug, Clone)]
pub struct Learner {
    config: LearnerConfig,
    /// Row-major `vocab x embed_dim`.
    embedding: Vec<f64>,
    head: Mlp,
    optimizer: RmsProp,
    step_count: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct LearnerSidecar {
    step_count: u64,
    config: LearnerConfig,
}

impl Learner {
    pub fn new<R: Rng + ?Sized>(config: LearnerConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let limit = (6.0 / (config.vocab_size + config.embed_dim) as f64).sqrt();
        let embedding = (0..config.vocab_size * config.embed_dim)
            .map(|_| rng.gen_range(-limit..=limit))
            .collect();
        let head = Mlp::new(&config.head_dims(), rng)?;
        Ok(Self {
            optimizer: RmsProp::new(config.optimizer),
            config,
            embedding,
            head,
            step_count: 0,
        })
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn vocab_size(&self) -> usize {
        self.config.vocab_size
    }

    fn embed(&self, token: Token) -> &[f64] {
        let d = self.config.embed_dim;
        let t = token as usize;
        &self.embedding[t * d..(t + 1) * d]
    }

    fn check_pair(&self, pair: &SentencePair) -> Result<()> {
        pair.validate(self.config.vocab_size)
    }

    /// Floored log-probabilities of every target token given `source`.
    fn log_prob_row(&self, source: Token) -> Result<Vec<f64>> {
        let logits = self.head.forward(self.embed(source))?;
        Ok(softmax(&logits)
            .into_iter()
            .map(|p| p.max(PROB_FLOOR).ln())
            .collect())
    }

    /// One RMSProp step on the mean per-token cross-entropy of the batch.
    /// Returns that mean loss, measured before the update.
    pub fn train_step<P: Borrow<SentencePair>>(&mut self, batch: &[P]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Data("empty training batch".into()));
        }
        let vocab = self.config.vocab_size;
        // counts[s][t]: positions where source token s is aligned with target t
        let mut counts: Vec<Option<Vec<f64>>> = vec![None; vocab];
        let mut positions = 0usize;
        for pair in batch {
            let pair = pair.borrow();
            self.check_pair(pair)?;
            for (j, &t) in pair.target.iter().enumerate() {
                let s = pair.aligned_source(j) as usize;
                counts[s].get_or_insert_with(|| vec![0.0; vocab])[t as usize] += 1.0;
            }
            positions += pair.target.len();
        }
        let norm = 1.0 / positions as f64;

        let d = self.config.embed_dim;
        let mut head_grads = self.head.zeros_like();
        let mut embed_grads = vec![0.0; self.embedding.len()];
        let mut loss = 0.0;
        for (s, row) in counts.iter().enumerate() {
            let Some(row) = row else { continue };
            let trace = self.head.forward_trace(self.embed(s as Token))?;
            let probs = softmax(trace.output());
            let n: f64 = row.iter().sum();
            let mut grad = Vec::with_capacity(vocab);
            for (p, &c) in probs.iter().zip(row) {
                if c > 0.0 {
                    loss -= c * p.max(PROB_FLOOR).ln();
                }
                grad.push((n * p - c) * norm);
            }
            let input_grad = self
                .head
                .accumulate_gradients(&trace, &grad, &mut head_grads)?;
            for (g, ig) in embed_grads[s * d..(s + 1) * d].iter_mut().zip(input_grad) {
                *g += ig;
            }
        }

        let mut grads: Vec<&[f64]> = vec![&embed_grads];
        grads.extend(head_grads.tensors());
        let mut params: Vec<&mut [f64]> = vec![&mut self.embedding];
        params.extend(self.head.tensors_mut());
        self.optimizer.step(&mut params, &grads)?;
        self.step_count += 1;
        Ok(loss * norm)
    }

    /// Mean per-token log-probability of each pair's target. Read-only.
    pub fn sentence_log_likelihoods<P: Borrow<SentencePair>>(
        &self,
        batch: &[P],
    ) -> Result<Vec<f64>> {
        if batch.is_empty() {
            return Err(Error::Data("empty evaluation batch".into()));
        }
        let mut rows: Vec<Option<Vec<f64>>> = vec![None; self.config.vocab_size];
        let mut out = Vec::with_capacity(batch.len());
        for pair in batch {
            let pair = pair.borrow();
            self.check_pair(pair)?;
            let mut total = 0.0;
            for (j, &t) in pair.target.iter().enumerate() {
                let s = pair.aligned_source(j);
                if rows[s as usize].is_none() {
                    rows[s as usize] = Some(self.log_prob_row(s)?);
                }
                total += rows[s as usize].as_ref().unwrap()[t as usize];
            }
            out.push(total / pair.target.len() as f64);
        }
        Ok(out)
    }

    /// Mean sentence log-likelihood over the dev set.
    pub fn dev_log_likelihood(&self, dev: &DevSet) -> Result<f64> {
        let lls = self.sentence_log_likelihoods(dev.pairs())?;
        Ok(lls.iter().sum::<f64>() / lls.len() as f64)
    }

    fn header(&self) -> ParamHeader {
        let mut tensors = vec![TensorSpec::new(
            "embedding",
            vec![self.config.vocab_size, self.config.embed_dim],
        )];
        tensors.extend(crate::neural::mlp_tensor_specs(&self.head, "head."));
        ParamHeader::new(self.head.layer_dims(), tensors)
    }

    /// Writes parameters to `path` and `{step_count, config}` to
    /// `path` with a `.json` extension.
    pub fn save(&self, path: &Path) -> Result<()> {
        write_params(path, &self.header(), &self.tensors())?;
        let sidecar = LearnerSidecar {
            step_count: self.step_count,
            config: self.config.clone(),
        };
        let side = path.with_extension("json");
        fs::write(&side, serde_json::to_vec_pretty(&sidecar)?).map_err(|e| Error::io(&side, e))
    }

    /// Restores parameters and step count. Optimizer state starts fresh.
    pub fn load(path: &Path) -> Result<Self> {
        let side = path.with_extension("json");
        let text = fs::read(&side).map_err(|e| Error::io(&side, e))?;
        let sidecar: LearnerSidecar = serde_json::from_slice(&text)?;
        let (header, tensors) = read_params(path)?;
        sidecar.config.validate()?;
        let mut learner = Learner {
            optimizer: RmsProp::new(sidecar.config.optimizer),
            embedding: Vec::new(),
            head: Mlp::zeros(&sidecar.config.head_dims())?,
            config: sidecar.config,
            step_count: sidecar.step_count,
        };
        if header != learner.header() {
            return Err(Error::Data(format!(
                "{}: parameter layout does not match learner config",
                path.display()
            )));
        }
        learner.embedding = tensors[0].clone();
        learner.head.assign_tensors(&header, tensors, "head.")?;
        Ok(learner)
    }
}

impl Parameters for Learner {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut t: Vec<&[f64]> = vec![&self.embedding];
        t.extend(self.head.tensors());
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t: Vec<&mut [f64]> = vec![&mut self.embedding];
        t.extend(self.head.tensors_mut());
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn learner(lr: f64) -> Learner {
        let cfg = LearnerConfig {
            vocab_size: 20,
            embed_dim: 8,
            hidden_dims: vec![16],
            optimizer: RmsPropConfig {
                learning_rate: lr,
                ..RmsPropConfig::default()
            },
        };
        Learner::new(cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap()
    }

    fn pair(id: u64, src: &[Token], tgt: &[Token]) -> SentencePair {
        SentencePair::new(id, src.to_vec(), tgt.to_vec())
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let mut l = learner(0.0);
        let before = l.fingerprint();
        let loss = l.train_step(&[pair(0, &[1, 2], &[3, 4])]).unwrap();
        assert!(loss > 0.0);
        assert_eq!(l.fingerprint(), before);
        assert_eq!(l.step_count(), 1);
    }

    #[test]
    fn fresh_learner_is_near_uniform() {
        let l = learner(0.01);
        let lls = l
            .sentence_log_likelihoods(&[pair(0, &[1, 5, 7], &[2, 2, 9])])
            .unwrap();
        assert!((lls[0] + 20f64.ln()).abs() < 0.1, "{}", lls[0]);
    }

    #[test]
    fn loss_matches_mean_negative_log_likelihood() {
        let mut l = learner(0.01);
        let batch = [pair(0, &[1, 2, 3], &[4, 5, 6]), pair(1, &[7], &[8])];
        let lls = l.sentence_log_likelihoods(&batch).unwrap();
        let expected = -(lls[0] * 3.0 + lls[1]) / 4.0;
        let loss = l.train_step(&batch).unwrap();
        assert!((loss - expected).abs() < 1e-12);
    }

    #[test]
    fn out_of_vocab_token_is_data_error() {
        let mut l = learner(0.01);
        assert!(matches!(
            l.train_step(&[pair(0, &[1], &[99])]),
            Err(Error::Data(_))
        ));
        assert!(l.train_step::<SentencePair>(&[]).is_err());
    }

    #[test]
    fn evaluation_is_read_only_and_order_invariant() {
        let l = learner(0.01);
        let a = pair(0, &[1, 2], &[3, 4]);
        let b = pair(1, &[5, 6, 7], &[8, 9, 1]);
        let before = l.fingerprint();
        let ab = l.sentence_log_likelihoods(&[&a, &b]).unwrap();
        let ba = l.sentence_log_likelihoods(&[&b, &a]).unwrap();
        assert_eq!(ab[0], ba[1]);
        assert_eq!(ab[1], ba[0]);
        assert_eq!(l.fingerprint(), before);
    }

    #[test]
    fn repeated_pair_likelihood_increases() {
        let mut l = learner(0.01);
        let p = pair(0, &[1, 2, 3, 4], &[5, 6, 7, 8]);
        let mut last = l.sentence_log_likelihoods(&[&p]).unwrap()[0];
        for _ in 0..5 {
            l.train_step(&[&p]).unwrap();
            let now = l.sentence_log_likelihoods(&[&p]).unwrap()[0];
            assert!(now > last);
            last = now;
        }
    }

    #[test]
    fn singleton_dev_set_equals_sentence_likelihood() {
        let l = learner(0.01);
        let p = pair(100, &[3, 4], &[5, 6]);
        let dev = DevSet::new(vec![p.clone()], &[]).unwrap();
        assert_eq!(
            l.dev_log_likelihood(&dev).unwrap(),
            l.sentence_log_likelihoods(&[&p]).unwrap()[0]
        );
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("learner.bin");
        let mut l = learner(0.01);
        l.train_step(&[pair(0, &[1, 2], &[3, 4])]).unwrap();
        l.save(&path).unwrap();
        let back = Learner::load(&path).unwrap();
        assert_eq!(back.fingerprint(), l.fingerprint());
        assert_eq!(back.step_count(), 1);
        assert_eq!(back.config(), l.config());
    }
}
