//! Centroid-cosine bias scores, most-biased rankings and bias curves.

mod pos;
mod targets;

use std::cmp::Ordering;
use std::collections::HashSet;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use pos::{parse_pos_filter, pos_tag, PosFilter, PosLexicon, PosTag, PosTagger};
pub use targets::{bundled_target_sets, TargetSet};

use crate::embedding::{cosine, named_centroid, norm, EmbeddingModel};
use crate::error::{Error, Result};

/// `cos(w, c1) - cos(w, c2)` where `c1`, `c2` are the target-set centroids.
/// Positive values lean toward `s1`.
pub fn bias_score(model: &EmbeddingModel, w: &str, s1: &TargetSet, s2: &TargetSet) -> Result<f64> {
    let v = model.vector(w).ok_or_else(|| Error::Lookup(w.to_string()))?;
    Metric::Centroid.poles(model, s1, s2)?.score(v)
}

/// Scoring rule used to rank vocabulary words.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Metric {
    /// Difference of cosines to the two centroids.
    Centroid,
    /// Cosine to the normalized centroid difference.
    Direct,
}

pub(crate) enum Poles {
    Centroid(Vec<f64>, Vec<f64>),
    Direct(Vec<f64>),
}

impl Metric {
    pub(crate) fn poles(self, model: &EmbeddingModel, s1: &TargetSet, s2: &TargetSet) -> Result<Poles> {
        let c1 = named_centroid(model, s1.name(), s1.words())?.vector;
        let c2 = named_centroid(model, s2.name(), s2.words())?.vector;
        Ok(match self {
            Metric::Centroid => Poles::Centroid(c1, c2),
            Metric::Direct => {
                let mut g: Vec<f64> = c1.iter().zip(&c2).map(|(a, b)| a - b).collect();
                let n = norm(&g);
                if n == 0.0 {
                    return Err(Error::Domain(format!(
                        "target sets {:?} and {:?} have identical centroids",
                        s1.name(),
                        s2.name()
                    )));
                }
                g.iter_mut().for_each(|x| *x /= n);
                Poles::Direct(g)
            }
        })
    }
}

impl Poles {
    pub(crate) fn score(&self, v: &[f64]) -> Result<f64> {
        match self {
            Poles::Centroid(c1, c2) => Ok(cosine(v, c1)? - cosine(v, c2)?),
            Poles::Direct(g) => cosine(v, g),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedWord {
    pub word: String,
    pub bias: f64,
    pub frequency: u64,
}

/// The top-k words toward `target` against `contrast`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasRanking {
    pub target: String,
    pub contrast: String,
    pub pos_filter: Vec<PosTag>,
    pub k: usize,
    /// Set when fewer than `k` candidates passed the filters.
    pub truncated: bool,
    pub entries: Vec<RankedWord>,
}

impl BiasRanking {
    pub fn words(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.word.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// CSV with columns `word,bias,frequency,rank`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["word", "bias", "frequency", "rank"])?;
        for (i, e) in self.entries.iter().enumerate() {
            w.write_record([
                e.word.clone(),
                e.bias.to_string(),
                e.frequency.to_string(),
                (i + 1).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Entries of a CSV written by [`BiasRanking::write_csv`], in rank order.
    pub fn read_csv(input: impl Read) -> Result<Vec<RankedWord>> {
        #[derive(Deserialize)]
        struct Row {
            word: String,
            bias: f64,
            frequency: u64,
            rank: usize,
        }
        let mut rows: Vec<Row> = csv::Reader::from_reader(input)
            .deserialize()
            .collect::<std::result::Result<_, _>>()?;
        rows.sort_by_key(|r| r.rank);
        Ok(rows
            .into_iter()
            .map(|r| RankedWord {
                word: r.word,
                bias: r.bias,
                frequency: r.frequency,
            })
            .collect())
    }
}

/// Descending bias, then higher frequency, then lexicographic.
pub(crate) fn ranking_order(a: &RankedWord, b: &RankedWord) -> Ordering {
    b.bias
        .total_cmp(&a.bias)
        .then_with(|| b.frequency.cmp(&a.frequency))
        .then_with(|| a.word.cmp(&b.word))
}

/// Score every admissible vocabulary word and sort by [`ranking_order`].
///
/// Candidates are words whose tag is in `allowed` (any tag if empty), that
/// do not belong to either target set, and whose vector is non-zero.
pub(crate) fn scored_candidates(
    model: &EmbeddingModel,
    s1: &TargetSet,
    s2: &TargetSet,
    tagger: &dyn PosTagger,
    allowed: &PosFilter,
    metric: Metric,
) -> Result<Vec<RankedWord>> {
    let poles = metric.poles(model, s1, s2)?;
    let excluded: HashSet<&str> = s1.words().iter().chain(s2.words()).map(String::as_str).collect();
    let vocab = model.vocab();
    let mut scored = (0..vocab.len())
        .into_par_iter()
        .filter_map(|i| {
            let word = vocab.word(i);
            if excluded.contains(word) || (!allowed.is_empty() && !allowed.contains(&tagger.tag(word))) {
                return None;
            }
            let v = model.row(i);
            if norm(v) == 0.0 {
                log::debug!("skipping zero vector for {word:?}");
                return None;
            }
            Some(poles.score(v).map(|bias| RankedWord {
                word: word.to_string(),
                bias,
                frequency: vocab.count(i),
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(ranking_order);
    Ok(scored)
}

pub(crate) fn rank_with(
    model: &EmbeddingModel,
    s1: &TargetSet,
    s2: &TargetSet,
    tagger: &dyn PosTagger,
    allowed: &PosFilter,
    k: usize,
    metric: Metric,
) -> Result<BiasRanking> {
    if k == 0 {
        return Err(Error::Argument("k must be at least 1".into()));
    }
    let mut entries = scored_candidates(model, s1, s2, tagger, allowed, metric)?;
    let truncated = entries.len() < k;
    if truncated {
        log::warn!(
            "only {} candidate words toward {:?}, fewer than k={k}",
            entries.len(),
            s1.name()
        );
    }
    entries.truncate(k);
    Ok(BiasRanking {
        target: s1.name().to_string(),
        contrast: s2.name().to_string(),
        pos_filter: allowed.iter().copied().collect(),
        k,
        truncated,
        entries,
    })
}

/// The `k` admissible words most biased toward `s1`.
pub fn rank_biased(
    model: &EmbeddingModel,
    s1: &TargetSet,
    s2: &TargetSet,
    tagger: &dyn PosTagger,
    allowed: &PosFilter,
    k: usize,
) -> Result<BiasRanking> {
    rank_with(model, s1, s2, tagger, allowed, k, Metric::Centroid)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionPoint {
    pub rank: usize,
    pub word: String,
    pub bias: f64,
}

/// Full bias curves in both directions over the same candidate words.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasDistribution {
    pub s1: String,
    pub s2: String,
    pub toward_s1: Vec<DistributionPoint>,
    /// Same words with the bias negated, re-sorted.
    pub toward_s2: Vec<DistributionPoint>,
}

impl BiasDistribution {
    /// CSV with columns `toward,rank,word,bias`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["toward", "rank", "word", "bias"])?;
        for (side, points) in [(&self.s1, &self.toward_s1), (&self.s2, &self.toward_s2)] {
            for p in points {
                w.write_record([side.clone(), p.rank.to_string(), p.word.clone(), p.bias.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn bias_distribution(
    model: &EmbeddingModel,
    s1: &TargetSet,
    s2: &TargetSet,
    tagger: &dyn PosTagger,
    allowed: &PosFilter,
) -> Result<BiasDistribution> {
    let forward = scored_candidates(model, s1, s2, tagger, allowed, Metric::Centroid)?;
    let mut backward: Vec<RankedWord> = forward
        .iter()
        .map(|e| RankedWord {
            bias: -e.bias,
            ..e.clone()
        })
        .collect();
    backward.sort_by(ranking_order);
    let curve = |entries: Vec<RankedWord>| {
        entries
            .into_iter()
            .enumerate()
            .map(|(i, e)| DistributionPoint {
                rank: i + 1,
                word: e.word,
                bias: e.bias,
            })
            .collect()
    };
    Ok(BiasDistribution {
        s1: s1.name().to_string(),
        s2: s2.name().to_string(),
        toward_s1: curve(forward),
        toward_s2: curve(backward),
    })
}
