use std::fs;
use std::path::Path;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::replay::{ReplayBuffer, Transition};
use crate::error::{check_len, Error, Result};
use crate::neural::{Mlp, Parameters, RmsProp, RmsPropConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DqnConfig {
    pub gamma: f64,
    /// Rewards summed before bootstrapping.
    pub update_horizon: usize,
    /// Replay size before any Q-network update.
    pub min_replay: usize,
    /// Agent steps between online-network updates.
    pub update_period: u64,
    /// Agent steps between target-network syncs.
    pub target_update_period: u64,
    pub batch_size: usize,
    pub q_hidden_dims: Vec<usize>,
    pub replay_capacity: usize,
    pub optimizer: RmsPropConfig,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            update_horizon: 2,
            min_replay: 3000,
            update_period: 4,
            target_update_period: 100,
            batch_size: 32,
            q_hidden_dims: vec![512, 512],
            replay_capacity: 50_000,
            optimizer: RmsPropConfig::default(),
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!(
                "gamma {} outside [0, 1]",
                self.gamma
            )));
        }
        if self.update_horizon == 0 {
            return Err(Error::Config("update horizon must be >= 1".into()));
        }
        if self.update_period == 0 || self.target_update_period == 0 {
            return Err(Error::Config("update periods must be >= 1".into()));
        }
        if self.batch_size == 0 || self.replay_capacity == 0 {
            return Err(Error::Config(
                "DQN batch size and replay capacity must be positive".into(),
            ));
        }
        if self.q_hidden_dims.contains(&0) {
            return Err(Error::Config("zero-width Q-network layer".into()));
        }
        self.optimizer.validate()
    }
}

/// Index of the largest value, ties to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Discounted n-step return of a window of consecutive transitions,
/// bootstrapped from the target network unless the window ends terminal.
pub fn n_step_target(window: &[&Transition], target_net: &Mlp, gamma: f64) -> Result<f64> {
    let (last, init) = window
        .split_last()
        .ok_or_else(|| Error::Internal("empty n-step window".into()))?;
    for (k, t) in init.iter().enumerate() {
        if t.terminal {
            return Err(Error::Internal(format!(
                "terminal transition at position {k} inside n-step window"
            )));
        }
        if t.next_observation != window[k + 1].observation {
            return Err(Error::Internal(format!(
                "n-step window is not consecutive at position {k}"
            )));
        }
    }
    let mut discount = 1.0;
    let mut ret = 0.0;
    for t in window {
        ret += discount * t.reward;
        discount *= gamma;
    }
    if !last.terminal {
        let q = target_net.forward(&last.next_observation)?;
        ret += discount * q[argmax(&q)];
    }
    Ok(ret)
}

/// Online and target Q-networks over bins.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    config: DqnConfig,
    online: Mlp,
    target: Mlp,
    optimizer: RmsProp,
    updates: u64,
    syncs: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct AgentSidecar {
    pub config: DqnConfig,
    pub updates: u64,
    pub syncs: u64,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl DqnAgent {
    /// Target starts as an exact copy of the online network.
    pub fn new<R: Rng + ?Sized>(
        config: DqnConfig,
        observation_dim: usize,
        num_actions: usize,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        let mut dims = vec![observation_dim];
        dims.extend(&config.q_hidden_dims);
        dims.push(num_actions);
        let online = Mlp::new(&dims, rng)?;
        Ok(Self {
            target: online.clone(),
            optimizer: RmsProp::new(config.optimizer),
            online,
            config,
            updates: 0,
            syncs: 0,
        })
    }

    pub fn config(&self) -> &DqnConfig {
        &self.config
    }

    pub fn online(&self) -> &Mlp {
        &self.online
    }

    pub fn target(&self) -> &Mlp {
        &self.target
    }

    pub fn num_actions(&self) -> usize {
        self.online.output_dim()
    }

    pub fn observation_dim(&self) -> usize {
        self.online.input_dim()
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn syncs(&self) -> u64 {
        self.syncs
    }

    pub fn q_values(&self, observation: &[f64]) -> Result<Vec<f64>> {
        self.online.forward(observation)
    }

    /// Epsilon-greedy over the online network. Always draws one uniform
    /// number for the explore test, and a second only when exploring.
    pub fn select_action(
        &self,
        observation: &[f64],
        epsilon: f64,
        rng: &mut dyn RngCore,
    ) -> Result<usize> {
        check_len(
            self.observation_dim(),
            observation.len(),
            "agent observation",
        )?;
        if rng.gen::<f64>() < epsilon {
            Ok(rng.gen_range(0..self.num_actions()))
        } else {
            Ok(argmax(&self.q_values(observation)?))
        }
    }

    /// One RMSProp step on the online network's squared TD error over a
    /// sampled batch. `None` while the replay is below `min_replay`.
    pub fn train_q_step(&mut self, replay: &mut ReplayBuffer) -> Result<Option<f64>> {
        if replay.len() < self.config.min_replay.max(1) {
            return Ok(None);
        }
        let batch = replay.sample_windows(self.config.batch_size, self.config.update_horizon)?;
        let scale = 1.0 / batch.len() as f64;
        let mut grads = self.online.zeros_like();
        let mut loss = 0.0;
        let mut out_grad = vec![0.0; self.num_actions()];
        for window in &batch {
            let target = n_step_target(window, &self.target, self.config.gamma)?;
            let first = window[0];
            if first.action >= self.num_actions() {
                return Err(Error::Action {
                    bin: first.action,
                    num_bins: self.num_actions(),
                });
            }
            let trace = self.online.forward_trace(&first.observation)?;
            let err = trace.output()[first.action] - target;
            loss += err * err * scale;
            out_grad.fill(0.0);
            out_grad[first.action] = 2.0 * err * scale;
            self.online
                .accumulate_gradients(&trace, &out_grad, &mut grads)?;
        }
        self.optimizer
            .step(&mut self.online.tensors_mut(), &grads.tensors())?;
        self.updates += 1;
        Ok(Some(loss))
    }

    pub fn sync_target(&mut self) {
        self.target
            .copy_from(&self.online)
            .expect("online and target share dims");
        self.syncs += 1;
    }

    /// Writes `online.bin`, `target.bin` and `agent.json` into `dir`.
    pub fn save(
        &self,
        dir: &Path,
        extra: serde_json::Map<String, serde_json::Value>,
    ) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.online.save(&dir.join("online.bin"))?;
        self.target.save(&dir.join("target.bin"))?;
        let sidecar = AgentSidecar {
            config: self.config.clone(),
            updates: self.updates,
            syncs: self.syncs,
            extra,
        };
        let path = dir.join("agent.json");
        fs::write(&path, serde_json::to_vec_pretty(&sidecar)?).map_err(|e| Error::io(&path, e))
    }

    /// Restores both networks and counters. Optimizer state starts fresh.
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("agent.json");
        let text = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let sidecar: AgentSidecar = serde_json::from_slice(&text)?;
        sidecar.config.validate()?;
        let online = Mlp::load(&dir.join("online.bin"))?;
        let target = Mlp::load(&dir.join("target.bin"))?;
        if online.layer_dims() != target.layer_dims() {
            return Err(Error::Data(
                "online and target networks differ in shape".into(),
            ));
        }
        Ok(Self {
            optimizer: RmsProp::new(sidecar.config.optimizer),
            config: sidecar.config,
            online,
            target,
            updates: sidecar.updates,
            syncs: sidecar.syncs,
        })
    }
}
