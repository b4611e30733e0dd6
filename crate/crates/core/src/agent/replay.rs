use std::collections::VecDeque;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed::Rng as SeedRng;

/// Observations are shared between consecutive transitions.
pub type Observation = Arc<[f64]>;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Observation,
    pub action: usize,
    pub reward: f64,
    pub next_observation: Observation,
    pub terminal: bool,
}

/// Fixed-capacity FIFO of transitions in arrival order.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    entries: VecDeque<Transition>,
    rng: SeedRng,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, rng: SeedRng) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            entries: VecDeque::with_capacity(capacity.min(1 << 16)),
            rng,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends, evicting the oldest entry when full.
    pub fn push(&mut self, transition: Transition) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(transition);
    }

    pub fn get(&self, index: usize) -> Option<&Transition> {
        self.entries.get(index)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.entries.iter()
    }

    /// Consecutive entries starting at `start`: up to `horizon` of them,
    /// stopping after the first terminal one. `None` if the buffer ends
    /// before the window is complete.
    pub fn window(&self, start: usize, horizon: usize) -> Option<Vec<&Transition>> {
        let mut out = Vec::with_capacity(horizon);
        for t in self.entries.range(start..).take(horizon) {
            out.push(t);
            if t.terminal {
                return Some(out);
            }
        }
        (out.len() == horizon).then_some(out)
    }

    /// Start indices whose window is complete.
    fn valid_starts(&self, horizon: usize) -> usize {
        // Every start up to len - horizon is complete; later ones only if a
        // terminal entry closes them.
        let full = (self.len() + 1).saturating_sub(horizon);
        let tail = (full..self.len())
            .filter(|&i| self.window(i, horizon).is_some())
            .count();
        full + tail
    }

    /// Samples `batch_size` complete windows uniformly with replacement.
    pub fn sample_windows(
        &mut self,
        batch_size: usize,
        horizon: usize,
    ) -> Result<Vec<Vec<&Transition>>> {
        if horizon == 0 {
            return Err(Error::Config("update horizon must be >= 1".into()));
        }
        let full = (self.len() + 1).saturating_sub(horizon);
        let valid = self.valid_starts(horizon);
        if valid == 0 {
            return Err(Error::Internal(
                "no complete replay window to sample".into(),
            ));
        }
        let tail: Vec<usize> = (full..self.len())
            .filter(|&i| self.window(i, horizon).is_some())
            .collect();
        let starts: Vec<usize> = (0..batch_size)
            .map(|_| {
                let k = self.rng.gen_range(0..valid);
                if k < full {
                    k
                } else {
                    tail[k - full]
                }
            })
            .collect();
        Ok(starts
            .into_iter()
            .map(|s| self.window(s, horizon).expect("start was validated"))
            .collect())
    }
}
