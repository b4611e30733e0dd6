//! Tab-separated corpus and score-cache files.
//!
//! Corpus lines: `id<TAB>source<TAB>target<TAB>score?<TAB>noise_truth?`, token
//! sequences space-separated. Score cache lines: `id<TAB>score`. Floats are
//! written in shortest round-trip form so reloading is lossless.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{PairId, SentencePair, Token};
use crate::error::{Error, Result};

fn parse_tokens(field: &str, path: &Path, line: usize) -> Result<Vec<Token>> {
    field
        .split_ascii_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Data(format!("{}:{line}: bad token {t:?}", path.display())))
        })
        .collect()
}

fn parse_opt_f64(field: Option<&str>, path: &Path, line: usize) -> Result<Option<f64>> {
    match field.map(str::trim) {
        None | Some("") => Ok(None),
        Some(s) => s
            .parse()
            .map(Some)
            .map_err(|_| Error::Data(format!("{}:{line}: bad number {s:?}", path.display()))),
    }
}

fn parse_id(field: &str, path: &Path, line: usize) -> Result<PairId> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Data(format!("{}:{line}: bad id {field:?}", path.display())))
}

pub fn read_corpus_tsv(path: &Path) -> Result<Vec<SentencePair>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if !(3..=5).contains(&fields.len()) {
            return Err(Error::Data(format!(
                "{}:{line}: expected 3 to 5 fields, found {}",
                path.display(),
                fields.len()
            )));
        }
        let pair = SentencePair {
            id: parse_id(fields[0], path, line)?,
            source: parse_tokens(fields[1], path, line)?,
            target: parse_tokens(fields[2], path, line)?,
            score: parse_opt_f64(fields.get(3).copied(), path, line)?,
            noise_truth: parse_opt_f64(fields.get(4).copied(), path, line)?,
        };
        if pair.source.is_empty() || pair.target.is_empty() {
            return Err(Error::Data(format!(
                "{}:{line}: empty token sequence",
                path.display()
            )));
        }
        pairs.push(pair);
    }
    Ok(pairs)
}

fn join_tokens(out: &mut String, tokens: &[Token]) {
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{t}").unwrap();
    }
}

fn comment_lines(comments: &[&str]) -> String {
    comments.iter().map(|c| format!("# {c}\n")).collect()
}

/// Writes `comments` as leading `#` lines, then one pair per line.
pub fn write_corpus_tsv(path: &Path, pairs: &[SentencePair], comments: &[&str]) -> Result<()> {
    let mut out = comment_lines(comments);
    for p in pairs {
        write!(out, "{}\t", p.id).unwrap();
        join_tokens(&mut out, &p.source);
        out.push('\t');
        join_tokens(&mut out, &p.target);
        out.push('\t');
        if let Some(s) = p.score {
            write!(out, "{s}").unwrap();
        }
        out.push('\t');
        if let Some(n) = p.noise_truth {
            write!(out, "{n}").unwrap();
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_score_tsv(path: &Path, pairs: &[SentencePair], comments: &[&str]) -> Result<()> {
    let mut out = comment_lines(comments);
    for p in pairs {
        let s = p
            .score
            .ok_or_else(|| Error::Data(format!("pair {} has no score", p.id)))?;
        writeln!(out, "{}\t{s}", p.id).unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_score_tsv(path: &Path) -> Result<HashMap<PairId, f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut scores = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let (id, score) = raw.split_once('\t').ok_or_else(|| {
            Error::Data(format!("{}:{line}: expected id<TAB>score", path.display()))
        })?;
        let id = parse_id(id, path, line)?;
        let score = parse_opt_f64(Some(score), path, line)?
            .ok_or_else(|| Error::Data(format!("{}:{line}: empty score", path.display())))?;
        if scores.insert(id, score).is_some() {
            return Err(Error::Data(format!(
                "{}:{line}: duplicate id {id}",
                path.display()
            )));
        }
    }
    Ok(scores)
}

/// Copies cached scores onto the pairs; every pair must have one.
pub fn apply_scores(pairs: &mut [SentencePair], scores: &HashMap<PairId, f64>) -> Result<()> {
    for p in pairs {
        p.score = Some(
            *scores
                .get(&p.id)
                .ok_or_else(|| Error::Data(format!("no cached score for pair {}", p.id)))?,
        );
    }
    Ok(())
}
