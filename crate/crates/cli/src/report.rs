use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use walkdir::WalkDir;

use crate::train::{Summary, SUMMARY};
use crate::usage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directories searched recursively for run summaries.
    #[arg(default_value = ".")]
    pub paths: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Comma-separated labels to list even when no run exists for them.
    #[arg(long, value_delimiter = ',')]
    pub expect: Vec<String>,
}

struct Row {
    label: String,
    policy: String,
    seeds: String,
    best_seed: String,
    final_dev_ll: Option<f64>,
    best_dev_ll: Option<f64>,
}

fn load_summaries(args: &ReportArgs) -> Result<Vec<Summary>> {
    let mut out = Vec::new();
    for root in &args.paths {
        if !root.exists() {
            return Err(usage(format!("{} does not exist", root.display())));
        }
        for entry in WalkDir::new(root).sort_by_file_name() {
            let entry = entry.with_context(|| format!("walking {}", root.display()))?;
            if entry.file_name() == SUMMARY {
                let text = fs::read(entry.path())
                    .with_context(|| format!("reading {}", entry.path().display()))?;
                let s: Summary = serde_json::from_slice(&text)
                    .with_context(|| format!("parsing {}", entry.path().display()))?;
                out.push(s);
            }
        }
    }
    Ok(out)
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.5}"))
}

pub fn render(summaries: &[Summary], expect: &[String], format: Format) -> Result<String> {
    if summaries.is_empty() {
        return Err(usage("no run summaries found"));
    }
    let testbed = &summaries[0].best.testbed_hash;
    if let Some(s) = summaries.iter().find(|s| &s.best.testbed_hash != testbed) {
        return Err(usage(format!(
            "refusing to compare runs on different testbeds ('{}' differs from '{}')",
            s.label, summaries[0].label
        )));
    }
    let mut rows: Vec<Row> = summaries
        .iter()
        .map(|s| Row {
            label: s.label.clone(),
            policy: s.best.policy.clone(),
            seeds: s
                .runs
                .iter()
                .map(|r| r.seed.to_string())
                .collect::<Vec<_>>()
                .join(" "),
            best_seed: s.best_seed.to_string(),
            final_dev_ll: Some(s.best.final_dev_ll),
            best_dev_ll: Some(s.best.best_dev_ll),
        })
        .collect();
    rows.sort_by(|a, b| {
        b.final_dev_ll
            .unwrap()
            .total_cmp(&a.final_dev_ll.unwrap())
            .then_with(|| a.label.cmp(&b.label))
    });
    for label in expect {
        if !rows.iter().any(|r| &r.label == label) {
            rows.push(Row {
                label: label.clone(),
                policy: "-".into(),
                seeds: "-".into(),
                best_seed: "-".into(),
                final_dev_ll: None,
                best_dev_ll: None,
            });
        }
    }

    let header = [
        "label",
        "policy",
        "seeds",
        "best_seed",
        "final_dev_ll",
        "best_dev_ll",
    ];
    let cells: Vec<[String; 6]> = rows
        .iter()
        .map(|r| {
            [
                r.label.clone(),
                r.policy.clone(),
                r.seeds.clone(),
                r.best_seed.clone(),
                num(r.final_dev_ll),
                num(r.best_dev_ll),
            ]
        })
        .collect();
    let mut out = String::new();
    match format {
        Format::Csv => {
            writeln!(out, "# testbed_hash={testbed}")?;
            writeln!(out, "{}", header.join(","))?;
            for c in &cells {
                writeln!(out, "{}", c.join(","))?;
            }
        }
        Format::Text => {
            let mut widths = header.map(str::len);
            for c in &cells {
                for (w, v) in widths.iter_mut().zip(c) {
                    *w = (*w).max(v.len());
                }
            }
            let line = |vals: Vec<&str>| {
                vals.iter()
                    .zip(&widths)
                    .map(|(v, w)| format!("{v:<w$}"))
                    .collect::<Vec<_>>()
                    .join("  ")
                    .trim_end()
                    .to_string()
            };
            writeln!(out, "{}", line(header.to_vec()))?;
            for c in &cells {
                writeln!(out, "{}", line(c.iter().map(String::as_str).collect()))?;
            }
        }
    }
    Ok(out)
}

pub fn run(args: ReportArgs) -> Result<()> {
    let summaries = load_summaries(&args)?;
    print!("{}", render(&summaries, &args.expect, args.format)?);
    Ok(())
}
