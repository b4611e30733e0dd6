//! Layout of a data directory written by `gen`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use currl_core::corpus::{read_corpus_tsv, SentencePair, SynthConfig};
use serde::{Deserialize, Serialize};

use crate::usage;

pub const CORPUS: &str = "corpus.tsv";
pub const TRUSTED: &str = "trusted.tsv";
pub const DEV: &str = "dev.tsv";
pub const SCORES: &str = "scores.tsv";
pub const META: &str = "meta.json";

/// How a data directory was generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataMeta {
    pub synth: SynthConfig,
    pub trusted: usize,
    pub dev: usize,
    pub config_hash: String,
}

pub struct DataDir {
    pub root: PathBuf,
}

impl DataDir {
    pub fn new(root: &Path) -> Result<Self> {
        if !root.is_dir() {
            return Err(usage(format!(
                "data directory {} does not exist",
                root.display()
            )));
        }
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn read_required(&self, name: &str, what: &str) -> Result<Vec<SentencePair>> {
        let path = self.path(name);
        if !path.exists() {
            return Err(usage(format!("missing {what} split {}", path.display())));
        }
        Ok(read_corpus_tsv(&path)?)
    }

    pub fn corpus(&self) -> Result<Vec<SentencePair>> {
        self.read_required(CORPUS, "corpus")
    }

    pub fn trusted(&self) -> Result<Vec<SentencePair>> {
        self.read_required(TRUSTED, "trusted")
    }

    pub fn dev(&self) -> Result<Vec<SentencePair>> {
        self.read_required(DEV, "dev")
    }

    /// Vocabulary recorded by `gen`, if the directory has one.
    pub fn vocab_size(&self) -> Result<Option<usize>> {
        let path = self.path(META);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
        let meta: DataMeta =
            serde_json::from_slice(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(Some(meta.synth.vocab_size))
    }
}
