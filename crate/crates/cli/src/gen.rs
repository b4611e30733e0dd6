use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use currl_core::corpus::{generate_synthetic_data, write_corpus_tsv, SentencePair, SynthConfig};
use currl_core::orchestrator::config_hash;

use crate::data::{DataMeta, CORPUS, DEV, META, TRUSTED};
use crate::usage;

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 6000)]
    pub pairs: usize,
    #[arg(long, default_value_t = 64)]
    pub vocab: usize,
    #[arg(long, default_value_t = 6)]
    pub len_min: usize,
    #[arg(long, default_value_t = 12)]
    pub len_max: usize,
    /// Comma-separated corruption rates; pairs are split evenly across them.
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.4,0.6,0.8")]
    pub noise: Vec<f64>,
    /// Zipf exponent for source tokens (0 = uniform).
    #[arg(long, default_value_t = 0.0)]
    pub skew: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Size of the trusted subset (taken from the cleanest level).
    #[arg(long, default_value_t = 200)]
    pub trusted: usize,
    /// Size of the clean dev set.
    #[arg(long, default_value_t = 300)]
    pub dev: usize,
    /// Print mean corruption per bin for this many equal-size bins, ranked
    /// by true corruption.
    #[arg(long)]
    pub bins_preview: Option<usize>,
    /// Overwrite existing files.
    #[arg(long)]
    pub force: bool,
}

pub fn run(args: GenArgs) -> Result<()> {
    let synth = SynthConfig {
        n_pairs: args.pairs,
        vocab_size: args.vocab,
        min_len: args.len_min,
        max_len: args.len_max,
        noise_levels: args.noise.clone(),
        seed: args.seed,
        source_skew: args.skew,
    };
    let outputs = [CORPUS, TRUSTED, DEV, META].map(|f| args.out.join(f));
    if !args.force {
        if let Some(p) = outputs.iter().find(|p| p.exists()) {
            return Err(usage(format!(
                "{} exists; pass --force to overwrite",
                p.display()
            )));
        }
    }
    let data = generate_synthetic_data(&synth, args.trusted, args.dev)?;
    let meta = DataMeta {
        synth,
        trusted: args.trusted,
        dev: args.dev,
        config_hash: String::new(),
    };
    let hash = config_hash(&meta);
    let meta = DataMeta {
        config_hash: hash.clone(),
        ..meta
    };
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let comment = format!("config_hash={hash}");
    write_corpus_tsv(&outputs[0], &data.corpus, &[&comment])?;
    let trusted: Vec<SentencePair> = data
        .trusted_ids
        .iter()
        .map(|&id| data.corpus[id as usize].clone())
        .collect();
    write_corpus_tsv(&outputs[1], &trusted, &[&comment])?;
    write_corpus_tsv(&outputs[2], &data.dev, &[&comment])?;
    fs::write(&outputs[3], serde_json::to_string_pretty(&meta)? + "\n")
        .with_context(|| format!("writing {}", outputs[3].display()))?;

    println!(
        "wrote {} pairs, {} trusted, {} dev to {}",
        data.corpus.len(),
        trusted.len(),
        data.dev.len(),
        args.out.display()
    );
    for &rate in &meta.synth.noise_levels {
        let n = data
            .corpus
            .iter()
            .filter(|p| p.noise_truth == Some(rate))
            .count();
        println!("  rate {rate}: {n} pairs");
    }
    if let Some(bins) = args.bins_preview {
        preview(&data.corpus, bins)?;
    }
    Ok(())
}

fn preview(corpus: &[SentencePair], bins: usize) -> Result<()> {
    if bins == 0 || bins > corpus.len() {
        return Err(usage(format!(
            "cannot preview {bins} bins of {} pairs",
            corpus.len()
        )));
    }
    let mut rates: Vec<f64> = corpus.iter().filter_map(|p| p.noise_truth).collect();
    rates.sort_by(|a, b| b.total_cmp(a));
    let (base, extra) = (rates.len() / bins, rates.len() % bins);
    let mut start = 0;
    println!("bin preview (0 = noisiest):");
    for b in 0..bins {
        let size = base + usize::from(b < extra);
        let chunk = &rates[start..start + size];
        start += size;
        println!(
            "  bin {b}: {size} pairs, mean corruption {:.3}",
            chunk.iter().sum::<f64>() / size as f64
        );
    }
    Ok(())
}
