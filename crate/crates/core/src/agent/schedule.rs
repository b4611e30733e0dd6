use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linearly decaying epsilon-greedy exploration in three phases: always
/// explore during warmup, decay linearly from 1 to `floor`, then stay at
/// `floor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub warmup_steps: u64,
    pub decay_steps: u64,
    pub floor: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            warmup_steps: 3000,
            decay_steps: 25_000,
            floor: 0.01,
        }
    }
}

impl EpsilonSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.floor) {
            return Err(Error::Config(format!(
                "epsilon floor {} outside [0, 1]",
                self.floor
            )));
        }
        Ok(())
    }

    pub fn epsilon_at(&self, agent_step: u64) -> f64 {
        if agent_step < self.warmup_steps {
            return 1.0;
        }
        let into_decay = agent_step - self.warmup_steps;
        if into_decay >= self.decay_steps {
            return self.floor;
        }
        1.0 - (1.0 - self.floor) * into_decay as f64 / self.decay_steps as f64
    }

    /// First agent step at which epsilon sits at the floor.
    pub fn floor_step(&self) -> u64 {
        self.warmup_steps + self.decay_steps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_values() {
        let s = EpsilonSchedule {
            warmup_steps: 100,
            decay_steps: 1000,
            floor: 0.01,
        };
        assert_eq!(s.epsilon_at(0), 1.0);
        assert_eq!(s.epsilon_at(99), 1.0);
        assert_eq!(s.epsilon_at(100), 1.0);
        assert!((s.epsilon_at(600) - 0.505).abs() < 1e-12);
        assert_eq!(s.epsilon_at(1100), 0.01);
        assert_eq!(s.epsilon_at(1_000_000), 0.01);
    }

    #[test]
    fn zero_decay_jumps_to_floor() {
        let s = EpsilonSchedule {
            warmup_steps: 5,
            decay_steps: 0,
            floor: 0.2,
        };
        assert_eq!(s.epsilon_at(4), 1.0);
        assert_eq!(s.epsilon_at(5), 0.2);
    }

    #[test]
    fn invalid_floor_rejected() {
        let s = EpsilonSchedule {
            floor: 1.5,
            ..Default::default()
        };
        assert!(s.validate().is_err());
    }
}
