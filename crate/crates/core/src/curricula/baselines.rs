//! Fixed and heuristic curricula. Bin `B-1` is always the cleanest.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{Curriculum, StepContext};
use crate::agent::EpsilonSchedule;
use crate::error::{Error, Result};

pub fn uniform_bins_action(num_bins: usize, rng: &mut dyn RngCore) -> usize {
    rng.gen_range(0..num_bins)
}

/// Bin drawn with probability proportional to its size, which makes the
/// following within-bin draw uniform over the whole corpus.
pub fn uniform_all_action(bin_sizes: &[usize], rng: &mut dyn RngCore) -> usize {
    let total: usize = bin_sizes.iter().sum();
    let mut k = rng.gen_range(0..total);
    for (b, &size) in bin_sizes.iter().enumerate() {
        if k < size {
            return b;
        }
        k -= size;
    }
    unreachable!("k < total")
}

/// Noisiest or cleanest bin with equal probability.
pub fn bookends_action(num_bins: usize, rng: &mut dyn RngCore) -> Result<usize> {
    if num_bins < 2 {
        return Err(Error::Config(format!(
            "bookends need at least 2 bins, got {num_bins}"
        )));
    }
    Ok(if rng.gen_bool(0.5) { num_bins - 1 } else { 0 })
}

/// Number of cleanest bins kept: `keep_fraction * B` rounded to the nearest
/// integer, at least one.
pub fn filtered_bin_count(num_bins: usize, keep_fraction: f64) -> Result<usize> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::Config(format!(
            "keep fraction {keep_fraction} outside (0, 1]"
        )));
    }
    Ok(((keep_fraction * num_bins as f64).round() as usize).clamp(1, num_bins))
}

pub fn filtered_action(
    num_bins: usize,
    keep_fraction: f64,
    rng: &mut dyn RngCore,
) -> Result<usize> {
    let kept = filtered_bin_count(num_bins, keep_fraction)?;
    Ok(num_bins - kept + rng.gen_range(0..kept))
}

/// Explore uniformly with the schedule's epsilon, otherwise take the cleanest
/// bin. Draws randomness exactly like the DQN agent's action selection.
pub fn fixed_epsilon_action(
    num_bins: usize,
    schedule: &EpsilonSchedule,
    agent_step: Option<u64>,
    rng: &mut dyn RngCore,
) -> usize {
    let eps = agent_step.map_or(1.0, |s| schedule.epsilon_at(s));
    if rng.gen::<f64>() < eps {
        rng.gen_range(0..num_bins)
    } else {
        num_bins - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Milestone {
    pub step: u64,
    pub active_bins: usize,
}

/// Active set shrinking toward the cleanest bins over training.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TelescopeSchedule {
    milestones: Vec<Milestone>,
}

impl TelescopeSchedule {
    pub fn new(milestones: Vec<Milestone>, num_bins: usize) -> Result<Self> {
        let first = milestones
            .first()
            .ok_or_else(|| Error::Config("telescope schedule has no milestones".into()))?;
        if first.step != 0 {
            return Err(Error::Config(
                "first telescope milestone must be at step 0".into(),
            ));
        }
        for pair in milestones.windows(2) {
            if pair[1].step <= pair[0].step {
                return Err(Error::Config(
                    "telescope steps must strictly increase".into(),
                ));
            }
            if pair[1].active_bins > pair[0].active_bins {
                return Err(Error::Config("telescope active bins must not grow".into()));
            }
        }
        if milestones
            .iter()
            .any(|m| m.active_bins == 0 || m.active_bins > num_bins)
        {
            return Err(Error::Config(format!(
                "telescope active bin counts must lie in 1..={num_bins}"
            )));
        }
        Ok(Self { milestones })
    }

    /// Halves the active set (rounding up) at evenly spaced milestones that
    /// span `span_fraction` of the run.
    pub fn geometric(num_bins: usize, total_steps: u64, span_fraction: f64) -> Result<Self> {
        let mut counts = vec![num_bins];
        while *counts.last().unwrap() > 1 {
            let c = *counts.last().unwrap();
            counts.push(c.div_ceil(2));
        }
        let halvings = (counts.len() - 1).max(1) as f64;
        let span = total_steps as f64 * span_fraction;
        let mut milestones: Vec<Milestone> = Vec::new();
        for (k, &active_bins) in counts.iter().enumerate() {
            let step = (k as f64 * span / halvings).round() as u64;
            match milestones.last_mut() {
                Some(last) if last.step >= step => last.active_bins = active_bins,
                _ => milestones.push(Milestone { step, active_bins }),
            }
        }
        Self::new(milestones, num_bins)
    }

    pub fn milestones(&self) -> &[Milestone] {
        &self.milestones
    }

    pub fn active_bins(&self, step: u64) -> usize {
        self.milestones
            .iter()
            .take_while(|m| m.step <= step)
            .last()
            .map_or(self.milestones[0].active_bins, |m| m.active_bins)
    }
}

/// Uniform over the currently active cleanest suffix.
pub fn telescoping_action(
    schedule: &TelescopeSchedule,
    num_bins: usize,
    step: u64,
    rng: &mut dyn RngCore,
) -> usize {
    let active = schedule.active_bins(step);
    num_bins - active + rng.gen_range(0..active)
}

pub(crate) struct UniformAll;

impl Curriculum for UniformAll {
    fn name(&self) -> &str {
        "uniform_all"
    }

    fn select_bin(&mut self, ctx: &StepContext<'_>, rng: &mut dyn RngCore) -> Result<usize> {
        Ok(uniform_all_action(ctx.bin_sizes, rng))
    }
}

pub(crate) struct UniformBins;

impl Curriculum for UniformBins {
    fn name(&self) -> &str {
        "uniform_bins"
    }

    fn select_bin(&mut self, ctx: &StepContext<'_>, rng: &mut dyn RngCore) -> Result<usize> {
        Ok(uniform_bins_action(ctx.num_bins(), rng))
    }
}

pub(crate) struct Bookends;

impl Curriculum for Bookends {
    fn name(&self) -> &str {
        "uniform_bookends"
    }

    fn select_bin(&mut self, ctx: &StepContext<'_>, rng: &mut dyn RngCore) -> Result<usize> {
        bookends_action(ctx.num_bins(), rng)
    }
}

pub(crate) struct Filtered {
    pub keep_fraction: f64,
}

impl Curriculum for Filtered {
    fn name(&self) -> &str {
        "filtered"
    }

    fn select_bin(&mut self, ctx: &StepContext<'_>, rng: &mut dyn RngCore) -> Result<usize> {
        filtered_action(ctx.num_bins(), self.keep_fraction, rng)
    }
}

pub(crate) struct FixedEpsilon {
    pub schedule: EpsilonSchedule,
}

impl Curriculum for FixedEpsilon {
    fn name(&self) -> &str {
        "fixed_epsilon"
    }

    fn select_bin(&mut self, ctx: &StepContext<'_>, rng: &mut dyn RngCore) -> Result<usize> {
        Ok(fixed_epsilon_action(
            ctx.num_bins(),
            &self.schedule,
            ctx.agent_step,
            rng,
        ))
    }

    fn epsilon(&self, ctx: &StepContext<'_>) -> Option<f64> {
        Some(ctx.agent_step.map_or(1.0, |s| self.schedule.epsilon_at(s)))
    }
}

pub(crate) struct Telescoping {
    pub schedule: TelescopeSchedule,
}

impl Curriculum for Telescoping {
    fn name(&self) -> &str {
        "telescoping"
    }

    fn select_bin(&mut self, ctx: &StepContext<'_>, rng: &mut dyn RngCore) -> Result<usize> {
        Ok(telescoping_action(
            &self.schedule,
            ctx.num_bins(),
            ctx.step,
            rng,
        ))
    }
}
