use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RmsPropConfig {
    pub learning_rate: f64,
    pub decay: f64,
    /// Added to the accumulator inside the square root.
    pub epsilon: f64,
}

impl Default for RmsPropConfig {
    /// Q-network settings: lr 0.00025, decay 0.95, no momentum.
    fn default() -> Self {
        Self {
            learning_rate: 0.00025,
            decay: 0.95,
            epsilon: 1e-10,
        }
    }
}

impl RmsPropConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::Config(format!(
                "RMSProp decay must be in (0, 1), got {}",
                self.decay
            )));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::Config("RMSProp epsilon must be > 0".into()));
        }
        Ok(())
    }
}

/// RMSProp without momentum:
/// `acc <- decay*acc + (1-decay)*g^2`, `p <- p - lr*g/sqrt(acc + eps)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsProp {
    config: RmsPropConfig,
    accumulators: Vec<Vec<f64>>,
}

impl RmsProp {
    pub fn new(config: RmsPropConfig) -> Self {
        Self {
            config,
            accumulators: Vec::new(),
        }
    }

    pub fn config(&self) -> &RmsPropConfig {
        &self.config
    }

    pub fn accumulators(&self) -> &[Vec<f64>] {
        &self.accumulators
    }

    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        check_len(params.len(), grads.len(), "rmsprop tensor count")?;
        if self.accumulators.is_empty() {
            self.accumulators = params.iter().map(|p| vec![0.0; p.len()]).collect();
        }
        check_len(
            self.accumulators.len(),
            params.len(),
            "rmsprop tensor count",
        )?;
        let RmsPropConfig {
            learning_rate,
            decay,
            epsilon,
        } = self.config;
        for ((p, g), acc) in params.iter_mut().zip(grads).zip(&mut self.accumulators) {
            check_len(acc.len(), p.len(), "rmsprop tensor")?;
            check_len(p.len(), g.len(), "rmsprop gradient")?;
            for ((p, &g), a) in p.iter_mut().zip(g.iter()).zip(acc.iter_mut()) {
                *a = decay * *a + (1.0 - decay) * g * g;
                *p -= learning_rate * g / (*a + epsilon).sqrt();
            }
        }
        Ok(())
    }
}
