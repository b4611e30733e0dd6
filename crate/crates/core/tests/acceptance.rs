//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.
//!
//! Run with `cargo test -p currl-core --test acceptance`.

use std::io::Write;
use std::time::{Duration, Instant};

use currl_core::agent::{n_step_target, EpsilonSchedule, ReplayBuffer, Transition};
use currl_core::corpus::{
    bin_corpus, cds_score, clean_vs_noisy_auc, generate_synthetic_data, prototype_batch,
    score_corpus, ScorerConfig, SentencePair, SynthConfig,
};
use currl_core::curricula::TelescopeSchedule;
use currl_core::learner::{Learner, LearnerConfig};
use currl_core::neural::{Mlp, Parameters, RmsProp, RmsPropConfig};
use currl_core::orchestrator::{run_experiment, RunConfig, RunOptions, RunOutcome, Testbed};
use currl_core::seed::{SeedTree, Stream};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: [u64; 3] = [1, 2, 3];

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check(name: &'static str, pass: bool, detail: String) -> Check {
    Check { name, pass, detail }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Scored testbed from a synthetic corpus.
fn testbed(synth: &SynthConfig, num_bins: usize) -> Testbed {
    let data = generate_synthetic_data(synth, 200, 300).unwrap();
    let scorer = ScorerConfig {
        learner: LearnerConfig {
            vocab_size: synth.vocab_size,
            ..LearnerConfig::default()
        },
        ..ScorerConfig::default()
    };
    let scored = score_corpus(&data.corpus, &data.trusted_ids, &scorer).unwrap();
    Testbed::new(&scored, data.dev, num_bins, 32).unwrap()
}

/// Desk-scale run settings shared by the experiment criteria.
fn run_config(kind: &str, vocab: usize, num_bins: usize, steps: u64, seed: u64) -> RunConfig {
    let mut c = RunConfig {
        total_steps: steps,
        nmt_warmup_steps: 500,
        eval_every: 10,
        num_bins,
        prototype_size: 32,
        seed,
        ..RunConfig::default()
    };
    c.learner.vocab_size = vocab;
    c.dqn.q_hidden_dims = vec![64, 64];
    c.dqn.optimizer.learning_rate = 0.001;
    c.dqn.gamma = 0.5;
    c.dqn.min_replay = 300;
    c.policy.kind = kind.into();
    c
}

fn run(config: &RunConfig, testbed: &Testbed) -> RunOutcome {
    run_experiment(config, testbed, &RunOptions::default()).unwrap()
}

fn bookend_convergence() -> Check {
    let synth = SynthConfig {
        noise_levels: vec![0.0, 0.6],
        ..SynthConfig::default()
    };
    let tb = testbed(&synth, 2);
    let mut rates = Vec::new();
    let mut slowest = Duration::ZERO;
    for seed in SEEDS {
        let config = run_config("rl_agent", synth.vocab_size, 2, 6000, seed);
        let floor = config.epsilon.floor;
        let start = Instant::now();
        let out = run(&config, &tb);
        slowest = slowest.max(start.elapsed());
        let post_floor: Vec<usize> = out
            .metrics
            .iter()
            .filter(|r| r.epsilon == Some(floor))
            .map(|r| r.bin)
            .collect();
        let rate = if post_floor.len() < 1000 {
            f64::NAN
        } else {
            let tail = &post_floor[post_floor.len() - 1000..];
            tail.iter().filter(|&&b| b == 1).count() as f64 / 1000.0
        };
        rates.push(rate);
    }
    let holds = rates.iter().filter(|&&r| r >= 0.9).count();
    check(
        "bookend convergence",
        holds >= 2 && slowest < Duration::from_secs(300),
        format!("clean-bin rates {rates:?}, slowest run {slowest:.1?}"),
    )
}

/// Six-bin corpus where clean data is scarce enough that moderately noisy
/// bins still add coverage of rare source tokens.
fn six_bin_synth() -> SynthConfig {
    SynthConfig {
        n_pairs: 2400,
        vocab_size: 128,
        source_skew: 1.5,
        ..SynthConfig::default()
    }
}

struct SixBin {
    rl: Vec<f64>,
    uniform_bins: Vec<f64>,
    filtered: Vec<f64>,
    uniform_all: Vec<f64>,
    fixed_epsilon: Vec<f64>,
    fixed_reward: Vec<f64>,
    fixed_observation: Vec<f64>,
}

fn six_bin_runs() -> SixBin {
    let synth = six_bin_synth();
    let tb = testbed(&synth, 6);
    let finals = |kind: &str, keep: Option<f64>| -> Vec<f64> {
        SEEDS
            .iter()
            .map(|&seed| {
                let mut c = run_config(kind, synth.vocab_size, 6, 5000, seed);
                if let Some(k) = keep {
                    c.policy.keep_fraction = k;
                }
                run(&c, &tb).report.final_dev_ll
            })
            .collect()
    };
    SixBin {
        rl: finals("rl_agent", None),
        uniform_bins: finals("uniform_bins", None),
        filtered: finals("filtered", Some(2.0 / 6.0)),
        uniform_all: finals("uniform_all", None),
        fixed_epsilon: finals("fixed_epsilon", None),
        fixed_reward: finals("ablation_fixed_reward", None),
        fixed_observation: finals("ablation_fixed_observation", None),
    }
}

/// `a` beats `b` by more than twice the larger across-seed deviation.
fn beats_with_margin(a: &[f64], b: &[f64]) -> (bool, String) {
    let margin = mean(a) - mean(b);
    let noise = 2.0 * sd(a).max(sd(b));
    (
        margin > noise,
        format!("margin {margin:.4} vs 2 sd {noise:.4}"),
    )
}

fn ordering(r: &SixBin) -> Check {
    let (rl_ok, rl_msg) = beats_with_margin(&r.rl, &r.uniform_bins);
    let (f_ok, f_msg) = beats_with_margin(&r.filtered, &r.uniform_all);
    check(
        "ordering preservation",
        rl_ok && f_ok,
        format!("rl_agent over uniform_bins: {rl_msg}; filtered over uniform_all: {f_msg}"),
    )
}

fn ablations(r: &SixBin) -> Check {
    let rl = median(&r.rl);
    let reward = median(&r.fixed_reward);
    let obs = median(&r.fixed_observation);
    check(
        "ablation directionality",
        reward <= rl && obs <= rl,
        format!("medians: rl_agent {rl:.4}, fixed reward {reward:.4}, fixed observation {obs:.4}"),
    )
}

fn fixed_epsilon(r: &SixBin) -> Check {
    let rl = median(&r.rl);
    let fe = median(&r.fixed_epsilon);
    let noise = 2.0 * sd(&r.rl).max(sd(&r.fixed_epsilon));
    let verdict = if rl >= fe {
        "rl_agent ahead"
    } else if fe - rl <= noise {
        "tie within noise"
    } else {
        "fixed_epsilon ahead"
    };
    check(
        "fixed-epsilon comparison",
        rl >= fe || fe - rl <= noise,
        format!("medians: rl_agent {rl:.4}, fixed_epsilon {fe:.4}, 2 sd {noise:.4}: {verdict}"),
    )
}

fn cds_validity() -> Check {
    let synth = SynthConfig {
        noise_levels: vec![0.0, 0.5],
        ..SynthConfig::default()
    };
    let data = generate_synthetic_data(&synth, 200, 100).unwrap();
    let scored = score_corpus(&data.corpus, &data.trusted_ids, &ScorerConfig::default()).unwrap();
    let auc = clean_vs_noisy_auc(&scored).unwrap();
    let model = Learner::new(LearnerConfig::default(), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let self_zero = data
        .corpus
        .iter()
        .take(200)
        .all(|p| cds_score(p, &model, &model).unwrap() == 0.0);
    check(
        "CDS validity",
        auc > 0.9 && self_zero,
        format!("AUC {auc:.4}, identical models score exactly 0: {self_zero}"),
    )
}

/// Largest normalized gap between analytic and central-difference gradients
/// of `c . net(x)` over 100 random nets.
fn backprop_error(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let depth = rng.gen_range(1..=3);
        let dims: Vec<usize> = (0..=depth).map(|_| rng.gen_range(1..=5)).collect();
        let mut net = Mlp::new(&dims, rng).unwrap();
        let x: Vec<f64> = (0..dims[0]).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c: Vec<f64> = (0..dims[depth]).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = |n: &Mlp| -> f64 {
            n.forward(&x)
                .unwrap()
                .iter()
                .zip(&c)
                .map(|(a, b)| a * b)
                .sum()
        };
        let analytic: Vec<f64> = net
            .backward(&x, &c)
            .unwrap()
            .tensors()
            .iter()
            .flat_map(|t| t.to_vec())
            .collect();
        let mut numeric = Vec::with_capacity(analytic.len());
        let h = 1e-5;
        let counts: Vec<usize> = net.tensors().iter().map(|t| t.len()).collect();
        for (ti, &n) in counts.iter().enumerate() {
            for i in 0..n {
                let orig = net.tensors()[ti][i];
                net.tensors_mut()[ti][i] = orig + h;
                let up = f(&net);
                net.tensors_mut()[ti][i] = orig - h;
                let down = f(&net);
                net.tensors_mut()[ti][i] = orig;
                numeric.push((up - down) / (2.0 * h));
            }
        }
        let diff: f64 = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, n)| (a - n).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let scale = (norm(&analytic) + norm(&numeric)).max(1e-12);
        worst = worst.max(diff / scale);
    }
    worst
}

/// Largest gap between the optimizer and a scalar recurrence worked out by
/// hand over a fixed gradient trace.
fn rmsprop_error() -> f64 {
    let cfg = RmsPropConfig {
        learning_rate: 0.1,
        decay: 0.9,
        epsilon: 1e-8,
    };
    // acc1 = 0.1 * 0.25 = 0.025, p1 = 1 - 0.1 * 0.5 / sqrt(0.02500001)
    let first = 1.0 - 0.05 / 0.025_000_01f64.sqrt();
    let grads = [0.5, -1.0, 0.25, 2.0, 0.0, -0.75];
    let mut opt = RmsProp::new(cfg);
    let mut p = [1.0];
    let (mut acc, mut q) = (0.0, 1.0);
    let mut worst = 0.0f64;
    for (k, &g) in grads.iter().enumerate() {
        opt.step(&mut [&mut p[..]], &[&[g][..]]).unwrap();
        acc = cfg.decay * acc + (1.0 - cfg.decay) * g * g;
        q -= cfg.learning_rate * g / (acc + cfg.epsilon).sqrt();
        worst = worst.max((p[0] - q).abs());
        if k == 0 {
            worst = worst.max((p[0] - first).abs());
        }
    }
    worst
}

/// Buffers of random trajectories; every complete window is compared with a
/// direct walk over the buffer. Returns the number of mismatches.
fn n_step_mismatches(rng: &mut ChaCha8Rng) -> usize {
    let mut bad = 0;
    for _ in 0..1000 {
        let dim = rng.gen_range(1..=3);
        let actions = rng.gen_range(1..=4);
        let horizon = rng.gen_range(1..=4);
        let gamma: f64 = rng.gen_range(0.0..=1.0);
        let target = Mlp::new(&[dim, 4, actions], rng).unwrap();
        let obs = |rng: &mut ChaCha8Rng| -> std::sync::Arc<[f64]> {
            (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        let mut replay = ReplayBuffer::new(64, SeedTree::new(0).rng(Stream::Replay)).unwrap();
        let len = rng.gen_range(1..=12);
        let mut current = obs(rng);
        for _ in 0..len {
            let next = obs(rng);
            let terminal = rng.gen_bool(0.2);
            replay.push(Transition {
                observation: current,
                action: rng.gen_range(0..actions),
                reward: rng.gen_range(-2.0..2.0),
                next_observation: next.clone(),
                terminal,
            });
            current = if terminal { obs(rng) } else { next };
        }
        for start in 0..replay.len() {
            let Some(window) = replay.window(start, horizon) else {
                continue;
            };
            let got = n_step_target(&window, &target, gamma).unwrap();
            let mut expect = 0.0;
            let mut discount = 1.0;
            let mut i = start;
            let mut bootstrap = true;
            while i < start + horizon {
                let t = replay.get(i).unwrap();
                expect += discount * t.reward;
                discount *= gamma;
                if t.terminal {
                    bootstrap = false;
                    break;
                }
                i += 1;
            }
            if bootstrap {
                let last = replay.get(start + horizon - 1).unwrap();
                let q = target.forward(&last.next_observation).unwrap();
                expect += discount * q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            }
            if got != expect {
                bad += 1;
            }
        }
    }
    bad
}

fn numerical_kernels() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let fd = backprop_error(&mut rng);
    let rms = rmsprop_error();
    let nstep = n_step_mismatches(&mut rng);
    check(
        "numerical kernels",
        fd < 1e-4 && rms <= 1e-12 && nstep == 0,
        format!("backprop rel err {fd:.2e}, RMSProp err {rms:.1e}, n-step mismatches {nstep}"),
    )
}

fn scored_pairs(rng: &mut ChaCha8Rng, n: usize) -> Vec<SentencePair> {
    (0..n as u64)
        .map(|id| SentencePair {
            // coarse values force many ties
            score: Some(f64::from(rng.gen_range(-20i32..20)) / 4.0),
            ..SentencePair::new(id, vec![0], vec![0])
        })
        .collect()
}

fn schedules_and_bins() -> Check {
    let eps = EpsilonSchedule {
        warmup_steps: 300,
        decay_steps: 1000,
        floor: 0.01,
    };
    let eps_ok = eps.epsilon_at(0) == 1.0
        && eps.epsilon_at(1300) == 0.01
        && (eps.epsilon_at(800) - 0.505).abs() < 1e-12;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut bins_ok = true;
    for _ in 0..200 {
        let n = rng.gen_range(2..200);
        let b = rng.gen_range(2..=n.min(9));
        let pairs = scored_pairs(&mut rng, n);
        let binned = bin_corpus(&pairs, b).unwrap();
        let sizes = binned.bin_sizes();
        let expect: Vec<usize> = (0..b).map(|i| n / b + usize::from(i < n % b)).collect();
        let key = |p: &SentencePair| (p.score.unwrap(), p.id);
        let ordered = binned.pairs().windows(2).all(|w| {
            key(&w[0]).0 < key(&w[1]).0 || (key(&w[0]).0 == key(&w[1]).0 && w[0].id < w[1].id)
        });
        let mut ids: Vec<u64> = binned.pairs().iter().map(|p| p.id).collect();
        ids.sort_unstable();
        bins_ok &= sizes == expect && ordered && ids == (0..n as u64).collect::<Vec<_>>();
    }

    let pairs = scored_pairs(&mut rng, 6000);
    let proto = prototype_batch(&bin_corpus(&pairs, 6).unwrap(), 32).unwrap();
    let proto_ok = proto.len() == 192 && proto.per_bin.iter().all(|b| b.len() == 32);

    let tele = TelescopeSchedule::geometric(6, 30_000, 0.6).unwrap();
    let active: Vec<usize> = (0..=30_000)
        .step_by(50)
        .map(|s| tele.active_bins(s))
        .collect();
    // the active set is the cleanest suffix, so shrinking counts mean nested sets
    let tele_ok =
        active.windows(2).all(|w| w[0] >= w[1]) && active[0] == 6 && *active.last().unwrap() == 1;

    check(
        "schedules and binning",
        eps_ok && bins_ok && proto_ok && tele_ok,
        format!(
            "epsilon {eps_ok}, bin invariants {bins_ok}, prototype {} pairs, telescoping monotone {tele_ok}",
            proto.len()
        ),
    )
}

fn determinism() -> Check {
    let synth = SynthConfig {
        n_pairs: 1200,
        ..SynthConfig::default()
    };
    let tb = testbed(&synth, 6);
    let mut config = run_config("rl_agent", synth.vocab_size, 6, 1500, 7);
    config.heatmap_bucket = 100;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        run(&config, &tb)
            .write_artifacts(d.path(), config.heatmap_bucket)
            .unwrap();
    }
    let read = |d: &tempfile::TempDir, f: &str| std::fs::read(d.path().join(f)).unwrap();
    let same = ["metrics.jsonl", "heatmap.csv"]
        .iter()
        .all(|f| read(&dirs[0], f) == read(&dirs[1], f));
    check(
        "determinism",
        same,
        format!("metrics and heatmap identical across two runs: {same}"),
    )
}

#[test]
fn acceptance() {
    let six = six_bin_runs();
    let checks = [
        bookend_convergence(),
        ordering(&six),
        ablations(&six),
        fixed_epsilon(&six),
        cds_validity(),
        numerical_kernels(),
        schedules_and_bins(),
        determinism(),
    ];
    // written to stderr directly so the verdicts show even when output is captured
    let mut err = std::io::stderr().lock();
    for (i, c) in checks.iter().enumerate() {
        let status = if c.pass { "PASS" } else { "FAIL" };
        writeln!(err, "[{status}] {}. {}: {}", i + 1, c.name, c.detail).unwrap();
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
