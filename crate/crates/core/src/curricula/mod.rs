//! Curricula: every policy that picks a bin per trainee step sits behind the
//! [`Curriculum`] trait and is constructed by name through a [`Registry`].

mod baselines;
mod learned;
mod registry;

use rand::RngCore;

pub use baselines::{
    bookends_action, filtered_action, filtered_bin_count, fixed_epsilon_action, telescoping_action,
    uniform_all_action, uniform_bins_action, Milestone, TelescopeSchedule,
};
pub use learned::{
    ablation_observation, ablation_reward, LearnedCurriculum, ObservationSource, RewardSource,
};
pub use registry::{Factory, PolicyConfig, PolicyEnv, Registry};

use crate::error::Result;

/// What a curriculum sees when it picks the bin for one trainee step.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    /// Trainee step, from 0.
    pub step: u64,
    /// Steps since the trainee warmup ended; `None` during warmup.
    pub agent_step: Option<u64>,
    pub bin_sizes: &'a [usize],
    /// Present when the curriculum asked for one.
    pub observation: Option<&'a [f64]>,
}

impl StepContext<'_> {
    pub fn num_bins(&self) -> usize {
        self.bin_sizes.len()
    }
}

pub trait Curriculum: Send {
    /// Registered kind name.
    fn name(&self) -> &str;

    fn select_bin(&mut self, ctx: &StepContext<'_>, rng: &mut dyn RngCore) -> Result<usize>;

    /// Exploration rate in effect at this step, if the policy has one.
    fn epsilon(&self, _ctx: &StepContext<'_>) -> Option<f64> {
        None
    }

    fn observation_source(&self) -> ObservationSource {
        ObservationSource::None
    }

    /// Hook for curricula that learn from transitions.
    fn learned(&mut self) -> Option<&mut LearnedCurriculum> {
        None
    }
}
