use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use sha2::{Digest, Sha256};

use super::config::RunConfig;
use super::report::{
    heatmap_csv, policy_heatmap, write_metrics_jsonl, FileHeader, MetricsRow, PolicyTrace,
    RunReport,
};
use super::reward::{flush_attributed, flush_with, PendingBuffer, PendingEntry, RewardTracker};
use crate::agent::Observation;
use crate::corpus::{
    bin_corpus, prototype_batch, sample_minibatch, validate_pairs, BinnedCorpus, DevSet,
    PrototypeBatch, SentencePair,
};
use crate::curricula::{
    ablation_observation, ablation_reward, Curriculum, ObservationSource, PolicyEnv, Registry,
    RewardSource, StepContext,
};
use crate::error::{Error, Result};
use crate::learner::Learner;
use crate::seed::{Rng, SeedTree, Stream};

/// Everything a run reads but never changes: binned corpus, prototype batch
/// and dev set.
#[derive(Debug, Clone)]
pub struct Testbed {
    pub binned: BinnedCorpus,
    pub prototype: PrototypeBatch,
    pub dev: DevSet,
}

impl Testbed {
    pub fn new(
        scored: &[SentencePair],
        dev: Vec<SentencePair>,
        num_bins: usize,
        prototype_size: usize,
    ) -> Result<Self> {
        let binned = bin_corpus(scored, num_bins)?;
        let prototype = prototype_batch(&binned, prototype_size)?;
        let dev = DevSet::new(dev, scored)?;
        Ok(Self {
            binned,
            prototype,
            dev,
        })
    }

    /// SHA-256 over every pair, bin boundary, dev pair and prototype id.
    pub fn hash(&self) -> String {
        fn pair(h: &mut Sha256, p: &SentencePair) {
            h.update(p.id.to_le_bytes());
            h.update((p.source.len() as u64).to_le_bytes());
            for t in &p.source {
                h.update(t.to_le_bytes());
            }
            h.update((p.target.len() as u64).to_le_bytes());
            for t in &p.target {
                h.update(t.to_le_bytes());
            }
            h.update(p.score.map_or(u64::MAX, f64::to_bits).to_le_bytes());
        }
        let mut h = Sha256::new();
        for p in self.binned.pairs() {
            pair(&mut h, p);
        }
        for s in self.binned.bin_sizes() {
            h.update((s as u64).to_le_bytes());
        }
        for p in self.dev.pairs() {
            pair(&mut h, p);
        }
        for id in self.prototype.flattened() {
            h.update(id.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Where checkpoints go; none are written without it.
    pub checkpoint_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub metrics: Vec<MetricsRow>,
    pub trace: PolicyTrace,
    pub learner: Learner,
}

impl RunOutcome {
    /// Writes `metrics.jsonl`, `heatmap.csv` and `report.json` into `dir`.
    pub fn write_artifacts(&self, dir: &Path, heatmap_bucket: u64) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let header = self.report.header();
        write_metrics_jsonl(&dir.join("metrics.jsonl"), &header, &self.metrics)?;
        let heatmap = policy_heatmap(&self.trace, heatmap_bucket)?;
        let path = dir.join("heatmap.csv");
        fs::write(&path, heatmap_csv(&header, &heatmap, heatmap_bucket))
            .map_err(|e| Error::io(&path, e))?;
        self.report.save(&dir.join("report.json"))
    }
}

pub fn run_experiment(
    config: &RunConfig,
    testbed: &Testbed,
    options: &RunOptions,
) -> Result<RunOutcome> {
    run_experiment_with(&Registry::builtin(), config, testbed, options)
}

/// Runs one experiment with curricula drawn from `registry`. Any failure
/// after setup is reported as [`Error::RunAborted`] with the last metrics row.
pub fn run_experiment_with(
    registry: &Registry,
    config: &RunConfig,
    testbed: &Testbed,
    options: &RunOptions,
) -> Result<RunOutcome> {
    let mut run = Runner::new(registry, config, testbed, options)?;
    let mut metrics = Vec::with_capacity(config.total_steps as usize);
    for t in 0..config.total_steps {
        match run.step(t) {
            Ok(row) => metrics.push(row),
            Err(source) => {
                return Err(Error::RunAborted {
                    step: t as usize,
                    last_row: metrics.last().and_then(|r| serde_json::to_string(r).ok()),
                    source: Box::new(source),
                })
            }
        }
    }
    let report = run.finish().map_err(|source| Error::RunAborted {
        step: config.total_steps as usize,
        last_row: metrics.last().and_then(|r| serde_json::to_string(r).ok()),
        source: Box::new(source),
    })?;
    Ok(RunOutcome {
        report,
        metrics,
        trace: run.trace,
        learner: run.learner,
    })
}

struct Runner<'a> {
    config: &'a RunConfig,
    testbed: &'a Testbed,
    checkpoint_dir: Option<PathBuf>,
    policy: Box<dyn Curriculum>,
    learner: Learner,
    prototype: Vec<&'a SentencePair>,
    bin_sizes: Vec<usize>,
    ones: Observation,
    observation: Option<Observation>,
    policy_rng: Rng,
    minibatch_rng: Rng,
    tracker: RewardTracker,
    pending: PendingBuffer,
    trace: PolicyTrace,
    header: FileHeader,
    initial_dev_ll: f64,
    last_dev_ll: f64,
    last_eval_step: u64,
    best: (f64, u64),
    best_checkpoint: Option<(f64, String)>,
    transitions: usize,
}

impl<'a> Runner<'a> {
    fn new(
        registry: &Registry,
        config: &'a RunConfig,
        testbed: &'a Testbed,
        options: &RunOptions,
    ) -> Result<Self> {
        config.validate()?;
        if testbed.binned.num_bins() != config.num_bins {
            return Err(Error::Config(format!(
                "testbed has {} bins, config asks for {}",
                testbed.binned.num_bins(),
                config.num_bins
            )));
        }
        if testbed
            .prototype
            .per_bin
            .iter()
            .any(|ids| ids.len() != config.prototype_size)
        {
            return Err(Error::Config(format!(
                "testbed prototype batch does not have {} pairs per bin",
                config.prototype_size
            )));
        }
        validate_pairs(testbed.binned.pairs(), config.learner.vocab_size)?;
        validate_pairs(testbed.dev.pairs(), config.learner.vocab_size)?;

        let seeds = SeedTree::new(config.seed);
        let bin_sizes = testbed.binned.bin_sizes();
        let env = PolicyEnv {
            bin_sizes: bin_sizes.clone(),
            observation_dim: config.observation_dim(),
            total_steps: config.total_steps,
            nmt_warmup_steps: config.nmt_warmup_steps,
            epsilon: config.epsilon_schedule(),
            dqn: config.dqn.clone(),
            seeds,
        };
        let policy = registry.create(&config.policy, &env)?;
        let learner = Learner::new(config.learner.clone(), &mut seeds.rng(Stream::TraineeInit))?;
        let initial_dev_ll = learner.dev_log_likelihood(&testbed.dev)?;
        let mut tracker = RewardTracker::new(config.reward.window)?;
        tracker.compute_reward(initial_dev_ll);
        let header = FileHeader {
            config_hash: config.hash(),
            testbed_hash: testbed.hash(),
            policy: policy.name().to_string(),
            seed: config.seed,
        };
        let mut run = Self {
            config,
            testbed,
            checkpoint_dir: options.checkpoint_dir.clone(),
            policy,
            learner,
            prototype: testbed.prototype.pairs(&testbed.binned)?,
            bin_sizes,
            ones: Arc::from(ablation_observation(config.observation_dim())),
            observation: None,
            policy_rng: seeds.rng(Stream::Policy),
            minibatch_rng: seeds.rng(Stream::Minibatch),
            tracker,
            pending: PendingBuffer::new(),
            trace: PolicyTrace::new(config.num_bins),
            header,
            initial_dev_ll,
            last_dev_ll: initial_dev_ll,
            last_eval_step: 0,
            best: (initial_dev_ll, 0),
            best_checkpoint: None,
            transitions: 0,
        };
        run.observation = run.observe()?;
        Ok(run)
    }

    fn observe(&self) -> Result<Option<Observation>> {
        Ok(match self.policy.observation_source() {
            ObservationSource::None => None,
            ObservationSource::FixedOnes => Some(self.ones.clone()),
            ObservationSource::Prototype => Some(Arc::from(
                self.learner.sentence_log_likelihoods(&self.prototype)?,
            )),
        })
    }

    fn step(&mut self, t: u64) -> Result<MetricsRow> {
        let cfg = self.config;
        let num_bins = cfg.num_bins;
        let agent_step = t.checked_sub(cfg.nmt_warmup_steps);
        let ctx = StepContext {
            step: t,
            agent_step,
            bin_sizes: &self.bin_sizes,
            observation: self.observation.as_deref(),
        };
        let epsilon = self.policy.epsilon(&ctx);
        let bin = self.policy.select_bin(&ctx, &mut self.policy_rng)?;
        if bin >= num_bins {
            return Err(Error::Action { bin, num_bins });
        }
        self.trace.actions.push(bin);
        let batch = sample_minibatch(
            &self.testbed.binned,
            bin,
            cfg.batch_size,
            &mut self.minibatch_rng,
        )?;
        let train_loss = self.learner.train_step(&batch)?;
        let next = self.observe()?;
        let done = t + 1;

        if agent_step.is_some() && self.policy.learned().is_some() {
            let (Some(observation), Some(next_observation)) =
                (self.observation.clone(), next.clone())
            else {
                return Err(Error::Internal(
                    "learned curriculum without observations".into(),
                ));
            };
            self.pending.push(PendingEntry {
                observation,
                action: bin,
                next_observation,
                terminal: done == cfg.total_steps,
            });
        }
        self.observation = next;

        let mut row = MetricsRow {
            step: t,
            bin,
            epsilon,
            train_loss,
            dev_ll: None,
            reward: None,
            q_loss: None,
            replay_size: 0,
        };

        if done.is_multiple_of(cfg.eval_every) {
            let dev_ll = self.evaluate(done)?;
            let reward = self.tracker.compute_reward(dev_ll);
            row.dev_ll = Some(dev_ll);
            row.reward = reward;
            if let Some(learned) = self.policy.learned() {
                self.transitions += match (learned.reward_source, reward) {
                    (RewardSource::DevDelta, Some(r)) => flush_attributed(
                        &mut self.pending,
                        r,
                        cfg.reward.attribution,
                        &mut learned.replay,
                    )?,
                    (RewardSource::DevDelta, None) => 0,
                    (RewardSource::FixedCleanest, _) => {
                        flush_with(&mut self.pending, &mut learned.replay, |_, e| {
                            ablation_reward(e.action, num_bins)
                        })?
                    }
                };
            }
        }

        if let (Some(s), Some(learned)) = (agent_step, self.policy.learned()) {
            if learned.replay.len() >= cfg.dqn.min_replay.max(1) {
                if s % cfg.dqn.update_period == 0 {
                    row.q_loss = learned.agent.train_q_step(&mut learned.replay)?;
                }
                if s % cfg.dqn.target_update_period == 0 {
                    learned.agent.sync_target();
                }
            }
            row.replay_size = learned.replay.len();
        }
        Ok(row)
    }

    /// Dev evaluation after `done` trainee steps, with checkpointing.
    fn evaluate(&mut self, done: u64) -> Result<f64> {
        let dev_ll = self.learner.dev_log_likelihood(&self.testbed.dev)?;
        if !dev_ll.is_finite() {
            return Err(Error::Internal(format!(
                "non-finite dev log-likelihood {dev_ll}"
            )));
        }
        self.last_dev_ll = dev_ll;
        self.last_eval_step = done;
        if dev_ll > self.best.0 {
            self.best = (dev_ll, done);
        }
        if done.is_multiple_of(self.config.checkpoint_every) || done == self.config.total_steps {
            self.checkpoint(done, dev_ll)?;
        }
        Ok(dev_ll)
    }

    fn checkpoint(&mut self, done: u64, dev_ll: f64) -> Result<()> {
        let id = format!("step-{done}");
        if let Some(root) = &self.checkpoint_dir {
            let dir = root.join(&id);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            self.learner.save(&dir.join("learner.bin"))?;
            let agent_step = done.saturating_sub(self.config.nmt_warmup_steps);
            let epsilon = self.config.epsilon_schedule().epsilon_at(agent_step);
            if let Some(learned) = self.policy.learned() {
                let mut extra = serde_json::Map::new();
                extra.insert("agent_step".into(), agent_step.into());
                extra.insert("epsilon".into(), epsilon.into());
                extra.insert("replay_size".into(), learned.replay.len().into());
                learned.agent.save(&dir.join("agent"), extra)?;
            }
        }
        if self
            .best_checkpoint
            .as_ref()
            .is_none_or(|(best, _)| dev_ll > *best)
        {
            self.best_checkpoint = Some((dev_ll, id));
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<RunReport> {
        let total = self.config.total_steps;
        if self.last_eval_step != total {
            self.evaluate(total)?;
        }
        let dropped_pending = self.pending.clear();
        let (q_updates, target_syncs) = match self.policy.learned() {
            Some(l) => (l.agent.updates(), l.agent.syncs()),
            None => (0, 0),
        };
        Ok(RunReport {
            config_hash: self.header.config_hash.clone(),
            testbed_hash: self.header.testbed_hash.clone(),
            policy: self.header.policy.clone(),
            seed: self.header.seed,
            total_steps: total,
            initial_dev_ll: self.initial_dev_ll,
            final_dev_ll: self.last_dev_ll,
            best_dev_ll: self.best.0,
            best_step: self.best.1,
            best_checkpoint: self.best_checkpoint.as_ref().map(|(_, id)| id.clone()),
            dropped_pending,
            transitions: self.transitions,
            q_updates,
            target_syncs,
        })
    }
}
