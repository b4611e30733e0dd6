use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::baselines::{
    filtered_bin_count, Bookends, Filtered, FixedEpsilon, Milestone, TelescopeSchedule,
    Telescoping, UniformAll, UniformBins,
};
use super::learned::{LearnedCurriculum, ObservationSource, RewardSource, RlCurriculum};
use super::Curriculum;
use crate::agent::{DqnAgent, DqnConfig, EpsilonSchedule, ReplayBuffer};
use crate::error::{Error, Result};
use crate::seed::{SeedTree, Stream};

/// Declarative policy choice as it appears in an experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyConfig {
    pub kind: String,
    /// Fraction of cleanest bins kept by `filtered`.
    pub keep_fraction: f64,
    /// Explicit milestones for `telescoping`; a geometric schedule otherwise.
    pub telescope: Option<Vec<Milestone>>,
    /// Replace the dev-delta reward with the cleanest-bin indicator.
    pub fixed_reward: bool,
    /// Replace the prototype observation with a vector of ones.
    pub fixed_observation: bool,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            kind: "rl_agent".into(),
            keep_fraction: 0.33,
            telescope: None,
            fixed_reward: false,
            fixed_observation: false,
        }
    }
}

/// Run facts a factory may need.
#[derive(Debug, Clone)]
pub struct PolicyEnv {
    pub bin_sizes: Vec<usize>,
    pub observation_dim: usize,
    pub total_steps: u64,
    pub nmt_warmup_steps: u64,
    pub epsilon: EpsilonSchedule,
    pub dqn: DqnConfig,
    pub seeds: SeedTree,
}

impl PolicyEnv {
    pub fn num_bins(&self) -> usize {
        self.bin_sizes.len()
    }
}

pub type Factory = fn(&PolicyConfig, &PolicyEnv) -> Result<Box<dyn Curriculum>>;

/// Curricula constructible by kind name.
#[derive(Clone)]
pub struct Registry {
    factories: BTreeMap<String, Factory>,
}

impl Registry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("uniform_all", |_, _| Ok(Box::new(UniformAll)));
        r.register("uniform_bins", |_, _| Ok(Box::new(UniformBins)));
        r.register("uniform_bookends", |_, env| {
            if env.num_bins() < 2 {
                return Err(Error::Config(
                    "uniform_bookends needs at least 2 bins".into(),
                ));
            }
            Ok(Box::new(Bookends))
        });
        r.register("filtered", |cfg, env| {
            filtered_bin_count(env.num_bins(), cfg.keep_fraction)?;
            Ok(Box::new(Filtered {
                keep_fraction: cfg.keep_fraction,
            }))
        });
        r.register("fixed_epsilon", |_, env| {
            Ok(Box::new(FixedEpsilon {
                schedule: env.epsilon,
            }))
        });
        r.register("telescoping", |cfg, env| {
            let schedule = match &cfg.telescope {
                Some(ms) => TelescopeSchedule::new(ms.clone(), env.num_bins())?,
                None => TelescopeSchedule::geometric(env.num_bins(), env.total_steps, 0.6)?,
            };
            Ok(Box::new(Telescoping { schedule }))
        });
        r.register("rl_agent", |cfg, env| {
            learned("rl_agent", cfg, env, false, false)
        });
        r.register("ablation_fixed_reward", |cfg, env| {
            learned("ablation_fixed_reward", cfg, env, true, false)
        });
        r.register("ablation_fixed_observation", |cfg, env| {
            learned("ablation_fixed_observation", cfg, env, false, true)
        });
        r
    }

    pub fn register(&mut self, name: &str, factory: Factory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn create(&self, cfg: &PolicyConfig, env: &PolicyEnv) -> Result<Box<dyn Curriculum>> {
        let factory = self.factories.get(&cfg.kind).ok_or_else(|| {
            Error::Usage(format!(
                "unknown policy kind '{}'; valid kinds: {}",
                cfg.kind,
                self.names().join(", ")
            ))
        })?;
        if env.bin_sizes.is_empty() || env.bin_sizes.contains(&0) {
            return Err(Error::Config("every bin must be non-empty".into()));
        }
        factory(cfg, env)
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::builtin()
    }
}

fn learned(
    name: &str,
    cfg: &PolicyConfig,
    env: &PolicyEnv,
    fixed_reward: bool,
    fixed_observation: bool,
) -> Result<Box<dyn Curriculum>> {
    env.epsilon.validate()?;
    let agent = DqnAgent::new(
        env.dqn.clone(),
        env.observation_dim,
        env.num_bins(),
        &mut env.seeds.rng(Stream::AgentInit),
    )?;
    let replay = ReplayBuffer::new(env.dqn.replay_capacity, env.seeds.rng(Stream::Replay))?;
    Ok(Box::new(RlCurriculum {
        name: name.to_string(),
        inner: LearnedCurriculum {
            agent,
            replay,
            schedule: env.epsilon,
            reward_source: if fixed_reward || cfg.fixed_reward {
                RewardSource::FixedCleanest
            } else {
                RewardSource::DevDelta
            },
            observation_source: if fixed_observation || cfg.fixed_observation {
                ObservationSource::FixedOnes
            } else {
                ObservationSource::Prototype
            },
        },
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curricula::StepContext;

    fn env() -> PolicyEnv {
        PolicyEnv {
            bin_sizes: vec![10; 6],
            observation_dim: 12,
            total_steps: 1000,
            nmt_warmup_steps: 100,
            epsilon: EpsilonSchedule {
                warmup_steps: 10,
                decay_steps: 100,
                floor: 0.01,
            },
            dqn: DqnConfig {
                q_hidden_dims: vec![8],
                ..DqnConfig::default()
            },
            seeds: SeedTree::new(3),
        }
    }

    #[test]
    fn all_kinds_registered() {
        let registry = Registry::builtin();
        let names = registry.names();
        for kind in [
            "uniform_all",
            "uniform_bins",
            "uniform_bookends",
            "filtered",
            "fixed_epsilon",
            "telescoping",
            "rl_agent",
            "ablation_fixed_reward",
            "ablation_fixed_observation",
        ] {
            assert!(names.contains(&kind), "{kind}");
        }
        assert_eq!(names.len(), 9);
    }

    #[test]
    fn unknown_kind_lists_valid_ones() {
        let cfg = PolicyConfig {
            kind: "greedy".into(),
            ..PolicyConfig::default()
        };
        match Registry::builtin().create(&cfg, &env()) {
            Err(Error::Usage(msg)) => {
                assert!(msg.contains("telescoping") && msg.contains("rl_agent"))
            }
            Err(e) => panic!("unexpected error {e}"),
            Ok(_) => panic!("unknown kind accepted"),
        }
    }

    #[test]
    fn every_kind_emits_valid_bins() {
        let registry = Registry::builtin();
        let env = env();
        let obs = vec![0.5; env.observation_dim];
        let mut rng = env.seeds.rng(Stream::Policy);
        for name in registry.names() {
            let cfg = PolicyConfig {
                kind: name.to_string(),
                ..PolicyConfig::default()
            };
            let mut policy = registry.create(&cfg, &env).unwrap();
            assert_eq!(policy.name(), name);
            for step in 0..1000u64 {
                let ctx = StepContext {
                    step,
                    agent_step: step.checked_sub(env.nmt_warmup_steps),
                    bin_sizes: &env.bin_sizes,
                    observation: Some(&obs),
                };
                let bin = policy.select_bin(&ctx, &mut rng).unwrap();
                assert!(bin < 6, "{name} emitted {bin}");
            }
        }
    }

    #[test]
    fn ablation_flags_combine() {
        let cfg = PolicyConfig {
            fixed_observation: true,
            ..PolicyConfig::default()
        };
        let mut reg = Registry::builtin()
            .create(
                &PolicyConfig {
                    kind: "ablation_fixed_reward".into(),
                    ..cfg
                },
                &env(),
            )
            .unwrap();
        let l = reg.learned().unwrap();
        assert_eq!(l.reward_source, RewardSource::FixedCleanest);
        assert_eq!(l.observation_source, ObservationSource::FixedOnes);
    }

    #[test]
    fn bad_parameters_rejected() {
        let reg = Registry::builtin();
        let bad_keep = PolicyConfig {
            kind: "filtered".into(),
            keep_fraction: 1.5,
            ..PolicyConfig::default()
        };
        assert!(matches!(
            reg.create(&bad_keep, &env()),
            Err(Error::Config(_))
        ));
        let bad_tel = PolicyConfig {
            kind: "telescoping".into(),
            telescope: Some(vec![Milestone {
                step: 0,
                active_bins: 9,
            }]),
            ..PolicyConfig::default()
        };
        assert!(matches!(
            reg.create(&bad_tel, &env()),
            Err(Error::Config(_))
        ));
    }
}
