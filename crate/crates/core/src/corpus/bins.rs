use std::cmp::Ordering;
use std::collections::HashMap;
use std::ops::Range;

use rand::Rng;

use super::{PairId, SentencePair};
use crate::error::{Error, Result};

/// Pairs sorted by `(score, id)` and cut into equal-size contiguous bins.
/// Bin 0 holds the lowest scores (noisiest), bin `B-1` the highest.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedCorpus {
    pairs: Vec<SentencePair>,
    bounds: Vec<Range<usize>>,
}

impl BinnedCorpus {
    pub fn num_bins(&self) -> usize {
        self.bounds.len()
    }

    pub fn bin(&self, index: usize) -> Result<&[SentencePair]> {
        self.bounds
            .get(index)
            .map(|r| &self.pairs[r.clone()])
            .ok_or(Error::Action {
                bin: index,
                num_bins: self.num_bins(),
            })
    }

    pub fn bin_ids(&self, index: usize) -> Result<Vec<PairId>> {
        Ok(self.bin(index)?.iter().map(|p| p.id).collect())
    }

    pub fn bin_sizes(&self) -> Vec<usize> {
        self.bounds.iter().map(|r| r.len()).collect()
    }

    /// All pairs in bin order.
    pub fn pairs(&self) -> &[SentencePair] {
        &self.pairs
    }

    pub fn scores(&self) -> HashMap<PairId, f64> {
        self.pairs
            .iter()
            .map(|p| (p.id, p.score.expect("binned pairs are scored")))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn score(p: &SentencePair) -> f64 {
        p.score.expect("binned pairs are scored")
    }
}

fn by_score_then_id(a: &SentencePair, b: &SentencePair) -> Ordering {
    BinnedCorpus::score(a)
        .total_cmp(&BinnedCorpus::score(b))
        .then(a.id.cmp(&b.id))
}

pub fn bin_corpus(scored: &[SentencePair], num_bins: usize) -> Result<BinnedCorpus> {
    if num_bins < 2 {
        return Err(Error::Config(format!(
            "need at least 2 bins, got {num_bins}"
        )));
    }
    if scored.len() < num_bins {
        return Err(Error::Config(format!(
            "{} pairs cannot fill {num_bins} bins",
            scored.len()
        )));
    }
    if let Some(p) = scored.iter().find(|p| !p.score.is_some_and(f64::is_finite)) {
        return Err(Error::Data(format!("pair {} has no finite score", p.id)));
    }
    let mut pairs = scored.to_vec();
    pairs.sort_by(by_score_then_id);

    let base = pairs.len() / num_bins;
    let extra = pairs.len() % num_bins;
    let mut bounds = Vec::with_capacity(num_bins);
    let mut start = 0;
    for i in 0..num_bins {
        let size = base + usize::from(i < extra);
        bounds.push(start..start + size);
        start += size;
    }
    Ok(BinnedCorpus { pairs, bounds })
}

/// Representative pairs per bin, bin 0 first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrototypeBatch {
    pub per_bin: Vec<Vec<PairId>>,
}

impl PrototypeBatch {
    pub fn flattened(&self) -> Vec<PairId> {
        self.per_bin.iter().flatten().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.per_bin.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Resolves the ids against the binned corpus, in flattened order.
    pub fn pairs<'a>(&self, binned: &'a BinnedCorpus) -> Result<Vec<&'a SentencePair>> {
        let mut out = Vec::with_capacity(self.len());
        for (b, ids) in self.per_bin.iter().enumerate() {
            let bin = binned.bin(b)?;
            for id in ids {
                let p = bin
                    .iter()
                    .find(|p| p.id == *id)
                    .ok_or_else(|| Error::Data(format!("prototype pair {id} is not in bin {b}")))?;
                out.push(p);
            }
        }
        Ok(out)
    }
}

/// The `m` pairs of each bin whose scores are closest to the bin mean, ties
/// to the lower id.
pub fn prototype_batch(binned: &BinnedCorpus, m: usize) -> Result<PrototypeBatch> {
    let mut per_bin = Vec::with_capacity(binned.num_bins());
    for b in 0..binned.num_bins() {
        let bin = binned.bin(b)?;
        if m > bin.len() {
            return Err(Error::Config(format!(
                "prototype size {m} exceeds bin {b} size {}",
                bin.len()
            )));
        }
        let mean = bin.iter().map(BinnedCorpus::score).sum::<f64>() / bin.len() as f64;
        let mut ranked: Vec<(f64, PairId)> = bin
            .iter()
            .map(|p| ((BinnedCorpus::score(p) - mean).abs(), p.id))
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        per_bin.push(ranked.into_iter().take(m).map(|(_, id)| id).collect());
    }
    Ok(PrototypeBatch { per_bin })
}

/// Uniform sampling with replacement from one bin.
pub fn sample_minibatch<'a, R: Rng + ?Sized>(
    binned: &'a BinnedCorpus,
    bin_index: usize,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<&'a SentencePair>> {
    let bin = binned.bin(bin_index)?;
    Ok((0..batch_size)
        .map(|_| &bin[rng.gen_range(0..bin.len())])
        .collect())
}
