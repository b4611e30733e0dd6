use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use currl_core::corpus::{read_corpus_tsv, read_score_tsv, score_corpus, ScorerConfig};

fn currl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_currl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = currl(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    currl(args).status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Small corpus, scored, plus a config for quick runs.
fn setup(root: &Path) {
    let data = root.join("data");
    ok(&[
        "gen",
        "--out",
        p(&data),
        "--pairs",
        "600",
        "--vocab",
        "16",
        "--len-min",
        "3",
        "--len-max",
        "6",
        "--trusted",
        "40",
        "--dev",
        "40",
    ]);
    ok(&[
        "score",
        "--data",
        p(&data),
        "--noisy-steps",
        "60",
        "--finetune-steps",
        "20",
    ]);
    let config = r#"{
        "run": {
            "total_steps": 120,
            "nmt_warmup_steps": 20,
            "prototype_size": 4,
            "batch_size": 8,
            "checkpoint_every": 50,
            "heatmap_bucket": 50,
            "learner": {"embed_dim": 4, "hidden_dims": [8]},
            "dqn": {"q_hidden_dims": [8], "min_replay": 20, "batch_size": 4}
        }
    }"#;
    fs::write(root.join("exp.json"), config).unwrap();
}

fn train(root: &Path, extra: &[&str]) -> String {
    let data = root.join("data");
    let out = root.join("runs");
    let exp = root.join("exp.json");
    let mut args = vec![
        "train",
        "--config",
        p(&exp),
        "--data",
        p(&data),
        "--out",
        p(&out),
    ];
    args.extend_from_slice(extra);
    ok(&args)
}

#[test]
fn gen_splits_levels_evenly_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d");
    let args = [
        "gen",
        "--out",
        p(&data),
        "--pairs",
        "6000",
        "--bins-preview",
        "6",
        "--noise",
        "0,0.1,0.2,0.4,0.6,0.8",
        "--seed",
        "1",
    ];
    let stdout = ok(&args);
    assert!(stdout.contains("bin 5"));
    let text = fs::read_to_string(data.join("corpus.tsv")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 6000);
    let corpus = read_corpus_tsv(&data.join("corpus.tsv")).unwrap();
    for rate in [0.0, 0.1, 0.2, 0.4, 0.6, 0.8] {
        assert_eq!(
            corpus
                .iter()
                .filter(|p| p.noise_truth == Some(rate))
                .count(),
            1000
        );
    }
    // refuses to overwrite, then reproduces byte for byte
    assert_eq!(code(&args), 1);
    let mut forced = args.to_vec();
    forced.push("--force");
    ok(&forced);
    assert_eq!(fs::read_to_string(data.join("corpus.tsv")).unwrap(), text);
}

#[test]
fn gen_single_clean_level() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d");
    ok(&[
        "gen",
        "--out",
        p(&data),
        "--pairs",
        "100",
        "--noise",
        "0",
        "--trusted",
        "10",
        "--dev",
        "10",
    ]);
    let corpus = read_corpus_tsv(&data.join("corpus.tsv")).unwrap();
    assert!(corpus.iter().all(|p| p.noise_truth == Some(0.0)));
}

#[test]
fn score_cache_matches_in_memory_scores() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d");
    ok(&[
        "gen",
        "--out",
        p(&data),
        "--pairs",
        "300",
        "--vocab",
        "16",
        "--trusted",
        "20",
        "--dev",
        "10",
    ]);
    let stdout = ok(&[
        "score",
        "--data",
        p(&data),
        "--noisy-steps",
        "40",
        "--finetune-steps",
        "10",
    ]);
    assert!(stdout.contains("AUC"));
    let corpus = read_corpus_tsv(&data.join("corpus.tsv")).unwrap();
    let trusted: Vec<u64> = read_corpus_tsv(&data.join("trusted.tsv"))
        .unwrap()
        .iter()
        .map(|p| p.id)
        .collect();
    let cfg = ScorerConfig {
        noisy_steps: 40,
        finetune_steps: 10,
        learner: currl_core::learner::LearnerConfig {
            vocab_size: 16,
            ..Default::default()
        },
        ..ScorerConfig::default()
    };
    let expect = score_corpus(&corpus, &trusted, &cfg).unwrap();
    let cached = read_score_tsv(&data.join("scores.tsv")).unwrap();
    for p in &expect {
        assert_eq!(cached[&p.id], p.score.unwrap());
    }
}

#[test]
fn zero_finetune_gives_zero_scores() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d");
    ok(&[
        "gen",
        "--out",
        p(&data),
        "--pairs",
        "120",
        "--vocab",
        "16",
        "--trusted",
        "10",
        "--dev",
        "10",
    ]);
    ok(&[
        "score",
        "--data",
        p(&data),
        "--noisy-steps",
        "20",
        "--finetune-steps",
        "0",
    ]);
    let cached = read_score_tsv(&data.join("scores.tsv")).unwrap();
    assert_eq!(cached.len(), 120);
    assert!(cached.values().all(|&s| s == 0.0));
}

#[test]
fn score_without_trusted_split_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d");
    ok(&[
        "gen",
        "--out",
        p(&data),
        "--pairs",
        "60",
        "--vocab",
        "16",
        "--trusted",
        "5",
        "--dev",
        "5",
    ]);
    fs::remove_file(data.join("trusted.tsv")).unwrap();
    assert_eq!(code(&["score", "--data", p(&data)]), 1);
}

#[test]
fn train_two_seeds_names_best() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path());
    let stdout = train(dir.path(), &["--policy", "rl_agent", "--seeds", "2"]);
    assert!(stdout.contains("best seed:"));
    let run = dir.path().join("runs/rl_agent");
    for seed in [1, 2] {
        for f in ["metrics.jsonl", "heatmap.csv", "report.json"] {
            assert!(run.join(format!("seed-{seed}/{f}")).exists(), "{f}");
        }
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["runs"].as_array().unwrap().len(), 2);
    let best = summary["best_seed"].as_u64().unwrap();
    assert!(stdout.contains(&format!("best seed: {best}")));
    let metrics = fs::read_to_string(run.join("seed-1/metrics.jsonl")).unwrap();
    assert!(metrics.lines().next().unwrap().contains("config_hash"));
    assert_eq!(metrics.lines().count(), 121);
    let heatmap = fs::read_to_string(run.join("seed-1/heatmap.csv")).unwrap();
    assert!(heatmap.starts_with("# config_hash="));
}

#[test]
fn baselines_and_ablations_run_from_one_corpus() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path());
    train(dir.path(), &["--policy", "telescoping"]);
    train(dir.path(), &["--policy", "filtered", "--keep", "0.2"]);
    train(dir.path(), &["--ablate-reward", "--ablate-observation"]);
    let runs = dir.path().join("runs");
    for label in [
        "telescoping",
        "filtered_0.2",
        "rl_agent+fixed_reward+fixed_observation",
    ] {
        assert!(runs.join(label).join("summary.json").exists(), "{label}");
    }
    let table = ok(&["report", p(&runs), "--expect", "uniform_bins"]);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("label"));
    assert!(lines[4].starts_with("uniform_bins") && lines[4].contains('-'));
    let lls: Vec<f64> = lines[1..4]
        .iter()
        .map(|l| l.split_whitespace().nth(4).unwrap().parse().unwrap())
        .collect();
    assert!(lls.windows(2).all(|w| w[0] >= w[1]), "{lls:?}");
    let csv = ok(&["report", p(&runs), "--format", "csv"]);
    assert!(csv.starts_with("# testbed_hash="));
}

#[test]
fn single_report_single_row() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path());
    train(dir.path(), &["--policy", "uniform_all"]);
    let table = ok(&["report", p(&dir.path().join("runs"))]);
    assert_eq!(table.lines().count(), 2);
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path());
    let data = dir.path().join("data");
    let out = dir.path().join("runs");
    let bad = currl(&[
        "train",
        "--data",
        p(&data),
        "--out",
        p(&out),
        "--policy",
        "greedy",
    ]);
    assert_eq!(bad.status.code(), Some(1));
    let err = String::from_utf8_lossy(&bad.stderr);
    assert!(
        err.contains("telescoping") && err.contains("rl_agent"),
        "{err}"
    );

    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"run": {"totl_steps": 5}}"#).unwrap();
    assert_eq!(
        code(&[
            "train",
            "--config",
            p(&cfg),
            "--data",
            p(&data),
            "--out",
            p(&out)
        ]),
        1
    );
    assert_eq!(code(&["report", p(&dir.path().join("nothing-here"))]), 1);
    assert_eq!(code(&["train", "--bogus-flag"]), 1);
    assert_eq!(
        code(&[
            "train",
            "--data",
            p(&data),
            "--out",
            p(&out),
            "--steps",
            "0"
        ]),
        1
    );
}

#[test]
fn mixed_testbeds_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path());
    train(dir.path(), &["--policy", "uniform_all"]);
    let other = dir.path().join("other");
    fs::create_dir_all(&other).unwrap();
    setup(&other);
    ok(&[
        "gen",
        "--out",
        p(&other.join("data")),
        "--pairs",
        "600",
        "--vocab",
        "16",
        "--len-min",
        "3",
        "--len-max",
        "6",
        "--trusted",
        "40",
        "--dev",
        "40",
        "--seed",
        "9",
        "--force",
    ]);
    ok(&[
        "score",
        "--data",
        p(&other.join("data")),
        "--noisy-steps",
        "60",
        "--finetune-steps",
        "20",
    ]);
    train(&other, &["--policy", "uniform_all", "--label", "other"]);
    let both = currl(&[
        "report",
        p(&dir.path().join("runs")),
        p(&other.join("runs")),
    ]);
    assert_eq!(both.status.code(), Some(1));
}

#[test]
fn corrupt_data_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path());
    fs::write(dir.path().join("data/dev.tsv"), "1\t2 x\t3\n").unwrap();
    let data = dir.path().join("data");
    let out = dir.path().join("runs");
    let exp = dir.path().join("exp.json");
    assert_eq!(
        code(&[
            "train",
            "--config",
            p(&exp),
            "--data",
            p(&data),
            "--out",
            p(&out)
        ]),
        2
    );
}
