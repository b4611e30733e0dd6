use rand::RngCore;

use super::{Curriculum, StepContext};
use crate::agent::{DqnAgent, EpsilonSchedule, ReplayBuffer};
use crate::error::{Error, Result};

/// Where the agent's observation comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservationSource {
    /// The curriculum needs no observation.
    None,
    /// Trainee log-likelihoods on the prototype batch.
    Prototype,
    /// A constant all-ones vector of the prototype dimension.
    FixedOnes,
}

/// How replayed transitions are rewarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardSource {
    /// Dev log-likelihood improvement.
    DevDelta,
    /// 1 for the cleanest bin, 0 otherwise.
    FixedCleanest,
}

/// 1.0 when the cleanest bin was chosen, else 0.0.
pub fn ablation_reward(action: usize, num_bins: usize) -> f64 {
    if action + 1 == num_bins {
        1.0
    } else {
        0.0
    }
}

pub fn ablation_observation(dim: usize) -> Vec<f64> {
    vec![1.0; dim]
}

/// State of a curriculum that learns from replayed transitions.
#[derive(Debug)]
pub struct LearnedCurriculum {
    pub agent: DqnAgent,
    pub replay: ReplayBuffer,
    pub schedule: EpsilonSchedule,
    pub reward_source: RewardSource,
    pub observation_source: ObservationSource,
}

impl LearnedCurriculum {
    /// Epsilon in force; always 1 during the trainee warmup.
    pub fn epsilon(&self, agent_step: Option<u64>) -> f64 {
        agent_step.map_or(1.0, |s| self.schedule.epsilon_at(s))
    }
}

pub(crate) struct RlCurriculum {
    pub name: String,
    pub inner: LearnedCurriculum,
}

impl Curriculum for RlCurriculum {
    fn name(&self) -> &str {
        &self.name
    }

    fn select_bin(&mut self, ctx: &StepContext<'_>, rng: &mut dyn RngCore) -> Result<usize> {
        let obs = ctx.observation.ok_or_else(|| {
            Error::Internal("learned curriculum called without observation".into())
        })?;
        let eps = self.inner.epsilon(ctx.agent_step);
        self.inner.agent.select_action(obs, eps, rng)
    }

    fn epsilon(&self, ctx: &StepContext<'_>) -> Option<f64> {
        Some(self.inner.epsilon(ctx.agent_step))
    }

    fn observation_source(&self) -> ObservationSource {
        self.inner.observation_source
    }

    fn learned(&mut self) -> Option<&mut LearnedCurriculum> {
        Some(&mut self.inner)
    }
}
