use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::{DqnConfig, EpsilonSchedule};
use crate::curricula::PolicyConfig;
use crate::error::{Error, Result};
use crate::learner::LearnerConfig;

/// How an arriving reward is spread over the transitions waiting for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribution {
    /// Every pending transition gets the reward.
    #[default]
    Broadcast,
    /// Only the most recent transition gets it; the others get 0.
    LastOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    /// Number of past dev evaluations the new one is compared against.
    pub window: usize,
    pub attribution: Attribution,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            window: 1,
            attribution: Attribution::Broadcast,
        }
    }
}

/// Epsilon schedule with run-relative defaults. Steps count trainee steps
/// after the trainee warmup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpsilonConfig {
    /// Defaults to the DQN `min_replay`.
    pub warmup_steps: Option<u64>,
    /// Defaults to half the post-warmup trainee steps.
    pub decay_steps: Option<u64>,
    pub floor: f64,
}

impl Default for EpsilonConfig {
    fn default() -> Self {
        Self {
            warmup_steps: None,
            decay_steps: None,
            floor: 0.01,
        }
    }
}

/// SHA-256 of a value's canonical JSON form.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serializes");
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub total_steps: u64,
    /// Initial trainee steps during which no transitions are recorded.
    pub nmt_warmup_steps: u64,
    /// Trainee steps between dev evaluations (and reward arrivals).
    pub eval_every: u64,
    pub num_bins: usize,
    /// Prototype pairs per bin.
    pub prototype_size: usize,
    /// Trainee minibatch size.
    pub batch_size: usize,
    pub policy: PolicyConfig,
    pub learner: LearnerConfig,
    pub dqn: DqnConfig,
    pub epsilon: EpsilonConfig,
    pub reward: RewardConfig,
    /// Steps per heatmap column.
    pub heatmap_bucket: u64,
    /// Steps between checkpoints; a multiple of `eval_every`.
    pub checkpoint_every: u64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            total_steps: 30_000,
            nmt_warmup_steps: 500,
            eval_every: 10,
            num_bins: 6,
            prototype_size: 32,
            batch_size: 32,
            policy: PolicyConfig::default(),
            learner: LearnerConfig::default(),
            dqn: DqnConfig {
                min_replay: 300,
                ..DqnConfig::default()
            },
            epsilon: EpsilonConfig::default(),
            reward: RewardConfig::default(),
            heatmap_bucket: 1000,
            checkpoint_every: 1000,
            seed: 1,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.total_steps == 0 {
            return Err(Error::Config("total_steps must be positive".into()));
        }
        if self.nmt_warmup_steps > self.total_steps {
            return Err(Error::Config(format!(
                "nmt_warmup_steps {} exceeds total_steps {}",
                self.nmt_warmup_steps, self.total_steps
            )));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be >= 1".into()));
        }
        if self.num_bins < 2 {
            return Err(Error::Config("num_bins must be >= 2".into()));
        }
        if self.prototype_size == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "prototype_size and batch_size must be positive".into(),
            ));
        }
        if self.heatmap_bucket == 0 {
            return Err(Error::Config("heatmap_bucket must be >= 1".into()));
        }
        if self.checkpoint_every == 0 || !self.checkpoint_every.is_multiple_of(self.eval_every) {
            return Err(Error::Config(format!(
                "checkpoint_every {} must be a positive multiple of eval_every {}",
                self.checkpoint_every, self.eval_every
            )));
        }
        if self.reward.window == 0 {
            return Err(Error::Config("reward window must be >= 1".into()));
        }
        self.learner.validate()?;
        self.dqn.validate()?;
        self.epsilon_schedule().validate()
    }

    pub fn epsilon_schedule(&self) -> EpsilonSchedule {
        let post_warmup = self.total_steps.saturating_sub(self.nmt_warmup_steps);
        EpsilonSchedule {
            warmup_steps: self
                .epsilon
                .warmup_steps
                .unwrap_or(self.dqn.min_replay as u64),
            decay_steps: self.epsilon.decay_steps.unwrap_or(post_warmup / 2),
            floor: self.epsilon.floor,
        }
    }

    pub fn observation_dim(&self) -> usize {
        self.num_bins * self.prototype_size
    }

    pub fn hash(&self) -> String {
        config_hash(self)
    }
}
