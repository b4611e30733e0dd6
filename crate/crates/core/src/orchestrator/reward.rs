use std::collections::VecDeque;

use super::config::Attribution;
use crate::agent::{Observation, ReplayBuffer, Transition};
use crate::error::{Error, Result};

/// Dev log-likelihood improvement over the mean of the recent past.
#[derive(Debug, Clone)]
pub struct RewardTracker {
    window: usize,
    history: VecDeque<f64>,
}

impl RewardTracker {
    pub fn new(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::Config("reward window must be >= 1".into()));
        }
        Ok(Self {
            window,
            history: VecDeque::with_capacity(window),
        })
    }

    /// `new_dev_ll` minus the mean of the last `window` values, then records
    /// it. The very first value only seeds the history and yields `None`.
    pub fn compute_reward(&mut self, new_dev_ll: f64) -> Option<f64> {
        let reward = (!self.history.is_empty())
            .then(|| new_dev_ll - self.history.iter().sum::<f64>() / self.history.len() as f64);
        if self.history.len() == self.window {
            self.history.pop_front();
        }
        self.history.push_back(new_dev_ll);
        reward
    }

    pub fn history(&self) -> impl Iterator<Item = f64> + '_ {
        self.history.iter().copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PendingEntry {
    pub observation: Observation,
    pub action: usize,
    pub next_observation: Observation,
    pub terminal: bool,
}

/// Transitions waiting for the next reward.
#[derive(Debug, Clone, Default)]
pub struct PendingBuffer {
    entries: Vec<PendingEntry>,
}

impl PendingBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: PendingEntry) {
        self.entries.push(entry);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[PendingEntry] {
        &self.entries
    }

    /// Empties the buffer and returns how many entries were discarded.
    pub fn clear(&mut self) -> usize {
        let n = self.entries.len();
        self.entries.clear();
        n
    }
}

/// Moves every pending entry into the replay with the same reward.
pub fn flush_pending(
    pending: &mut PendingBuffer,
    reward: f64,
    replay: &mut ReplayBuffer,
) -> Result<usize> {
    flush_with(pending, replay, |_, _| reward)
}

/// Moves every pending entry into the replay, in order, with the reward
/// given by `reward_of(index, entry)`.
pub fn flush_with<F>(
    pending: &mut PendingBuffer,
    replay: &mut ReplayBuffer,
    mut reward_of: F,
) -> Result<usize>
where
    F: FnMut(usize, &PendingEntry) -> f64,
{
    let n = pending.entries.len();
    let mut rewards = Vec::with_capacity(n);
    for (i, e) in pending.entries.iter().enumerate() {
        let r = reward_of(i, e);
        if !r.is_finite() {
            return Err(Error::Internal(format!("non-finite reward {r}")));
        }
        rewards.push(r);
    }
    for (e, reward) in pending.entries.drain(..).zip(rewards) {
        replay.push(Transition {
            observation: e.observation,
            action: e.action,
            reward,
            next_observation: e.next_observation,
            terminal: e.terminal,
        });
    }
    Ok(n)
}

/// Flushes with the configured attribution of a dev-delta reward.
pub fn flush_attributed(
    pending: &mut PendingBuffer,
    reward: f64,
    attribution: Attribution,
    replay: &mut ReplayBuffer,
) -> Result<usize> {
    let last = pending.len().saturating_sub(1);
    match attribution {
        Attribution::Broadcast => flush_pending(pending, reward, replay),
        Attribution::LastOnly => {
            flush_with(pending, replay, |i, _| if i == last { reward } else { 0.0 })
        }
    }
}
