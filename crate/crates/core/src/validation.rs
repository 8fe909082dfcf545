//! WEAT permutation tests, metric agreement and stability analyses.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Write;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bias::{rank_with, BiasRanking, Metric, PosFilter, PosTagger, TargetSet};
use crate::cluster::{intra_similarity, kmeans_partition};
use crate::corpus::TokenizedCorpus;
use crate::embedding::{build_vocab, cosine, train_skipgram, EmbeddingModel};
use crate::error::{Error, Result};
use crate::label::{label_clusters, rank_labels, LabelMode, LabelRankTable, SemanticLexicon};
use crate::pipeline::{analyze, PipelineConfig, Seeds, Setup};
use crate::sentiment::SentimentLexicon;

pub const DEFAULT_MAX_PERMUTATIONS: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeatResult {
    pub statistic: f64,
    pub effect_size: f64,
    pub p_value: f64,
    pub permutations_used: u64,
    /// True when every balanced repartition was enumerated.
    pub exact: bool,
    /// Size of each of X and Y after vocabulary filtering and trimming.
    pub set_size: usize,
}

impl WeatResult {
    pub fn write_csv(&self, name: &str, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["test", "statistic", "effect_size", "p_value", "permutations", "exact", "set_size"])?;
        w.write_record([
            name.to_string(),
            self.statistic.to_string(),
            self.effect_size.to_string(),
            self.p_value.to_string(),
            self.permutations_used.to_string(),
            self.exact.to_string(),
            self.set_size.to_string(),
        ])?;
        w.flush()?;
        Ok(())
    }
}

fn in_vocab<'m>(model: &'m EmbeddingModel, set: &TargetSet) -> Result<Vec<&'m [f64]>> {
    let mut missing = Vec::new();
    let rows: Vec<&[f64]> = set
        .words()
        .iter()
        .filter_map(|w| {
            let v = model.vector(w);
            if v.is_none() {
                missing.push(w.clone());
            }
            v
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::TargetSet {
            name: set.name().to_string(),
            missing,
        });
    }
    if !missing.is_empty() {
        log::warn!("set {:?}: skipping out-of-vocabulary words {missing:?}", set.name());
    }
    Ok(rows)
}

/// Number of size-`m` subsets of `n` items, saturating.
pub fn binomial(n: u64, m: u64) -> u64 {
    if m > n {
        return 0;
    }
    let m = m.min(n - m);
    let mut acc: u128 = 1;
    for i in 0..m {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Word-embedding association test of targets X, Y against attributes A, B.
///
/// The p-value is one-sided: the share of balanced repartitions of X ∪ Y
/// whose statistic is at least the observed one. Partitions are enumerated
/// when there are at most `max_permutations` of them, otherwise
/// `max_permutations` uniformly random repartitions are drawn.
pub fn weat(
    model: &EmbeddingModel,
    x: &TargetSet,
    y: &TargetSet,
    a: &TargetSet,
    b: &TargetSet,
    max_permutations: u64,
    seed: u64,
) -> Result<WeatResult> {
    if max_permutations == 0 {
        return Err(Error::Argument("max_permutations must be positive".into()));
    }
    let mut xs = in_vocab(model, x)?;
    let mut ys = in_vocab(model, y)?;
    let av = in_vocab(model, a)?;
    let bv = in_vocab(model, b)?;
    let m = xs.len().min(ys.len());
    if xs.len() != ys.len() {
        log::warn!(
            "trimming {:?}/{:?} to {m} words each (had {} and {})",
            x.name(),
            y.name(),
            xs.len(),
            ys.len()
        );
        xs.truncate(m);
        ys.truncate(m);
    }
    let assoc = |w: &[f64]| -> Result<f64> {
        let mut sa = 0.0;
        for v in &av {
            sa += cosine(w, v)?;
        }
        let mut sb = 0.0;
        for v in &bv {
            sb += cosine(w, v)?;
        }
        Ok(sa / av.len() as f64 - sb / bv.len() as f64)
    };
    let s: Vec<f64> = xs.iter().chain(&ys).map(|w| assoc(w)).collect::<Result<_>>()?;
    let (sx, sy) = s.split_at(m);
    let sum_x: f64 = sx.iter().sum();
    let sum_y: f64 = sy.iter().sum();
    let statistic = sum_x - sum_y;

    let n = s.len();
    let mean = s.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        s.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let std = var.sqrt();
    let effect_size = if std > 0.0 {
        (sum_x / m as f64 - sum_y / m as f64) / std
    } else {
        0.0
    };

    // A repartition's statistic is 2·Σ_X' s − Σ s, so comparing Σ_X' s
    // against the observed Σ_X s is equivalent.
    let scale: f64 = s.iter().map(|v| v.abs()).sum::<f64>() + 1.0;
    let threshold = sum_x - 1e-12 * scale;
    let total = binomial(n as u64, m as u64);
    let (hits, used, exact) = if total <= max_permutations {
        let hits = (0..n)
            .combinations(m)
            .filter(|idx| idx.iter().map(|&i| s[i]).sum::<f64>() >= threshold)
            .count() as u64;
        (hits, total, true)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hits = 0u64;
        for _ in 0..max_permutations {
            let idx = rand::seq::index::sample(&mut rng, n, m);
            if idx.iter().map(|i| s[i]).sum::<f64>() >= threshold {
                hits += 1;
            }
        }
        (hits, max_permutations, false)
    };
    Ok(WeatResult {
        statistic,
        effect_size,
        p_value: hits as f64 / used as f64,
        permutations_used: used,
        exact,
        set_size: m,
    })
}

/// `|A ∩ B| / |A ∪ B|` over the distinct words; 1 when both are empty.
pub fn jaccard_topk<S: AsRef<str>, T: AsRef<str>>(a: &[S], b: &[T]) -> f64 {
    let a: HashSet<&str> = a.iter().map(AsRef::as_ref).collect();
    let b: HashSet<&str> = b.iter().map(AsRef::as_ref).collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// Ranking by `cos(w, g)` with `g` the unit vector along
/// `centroid(s1) − centroid(s2)`.
pub fn direct_bias_rank(
    model: &EmbeddingModel,
    s1: &TargetSet,
    s2: &TargetSet,
    tagger: &dyn PosTagger,
    allowed: &PosFilter,
    k: usize,
) -> Result<BiasRanking> {
    rank_with(model, s1, s2, tagger, allowed, k, Metric::Direct)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityRun {
    pub run: usize,
    pub sample_seed: u64,
    pub comments: usize,
    pub vocab_size: usize,
    pub table: LabelRankTable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelStability {
    pub label: String,
    /// 1 or 2.
    pub side: u8,
    /// Runs in which the label was ranked on this side.
    pub runs_present: usize,
    pub mean_rank: f64,
    /// Sample variance over the runs where the label is present.
    pub rank_variance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub fraction: f64,
    pub seed: u64,
    pub runs: Vec<StabilityRun>,
    pub labels: Vec<LabelStability>,
    pub top_n: usize,
    /// `overlap1[i][j]` = labels shared by the top-`top_n` lists of runs i, j.
    pub overlap1: Vec<Vec<usize>>,
    pub overlap2: Vec<Vec<usize>>,
}

impl StabilityReport {
    /// Rank of `label` on `side` in every run.
    pub fn ranks_of(&self, side: u8, label: &str) -> Vec<Option<usize>> {
        self.runs
            .iter()
            .map(|r| r.table.row(label).and_then(|row| if side == 1 { row.rank1 } else { row.rank2 }))
            .collect()
    }
}

pub const TOP_N: usize = 10;

fn overlap_matrix(tops: &[Vec<&str>]) -> Vec<Vec<usize>> {
    tops.iter()
        .map(|a| {
            tops.iter()
                .map(|b| a.iter().filter(|l| b.contains(l)).count())
                .collect()
        })
        .collect()
}

fn mean_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Retrain on `n_runs` random comment subsamples and compare label ranks.
///
/// Every run uses the stage seeds derived from `cfg.seed`; only the sample
/// differs. Run `i` samples with the `i`-th draw of a generator seeded with
/// `seed`.
pub fn bootstrap_stability(
    corpus: &TokenizedCorpus,
    cfg: &PipelineConfig,
    setup: &Setup,
    n_runs: usize,
    fraction: f64,
    seed: u64,
) -> Result<StabilityReport> {
    if n_runs < 2 {
        return Err(Error::Argument(format!("stability needs at least 2 runs, got {n_runs}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample_seeds: Vec<u64> = (0..n_runs).map(|_| rng.gen()).collect();
    let seeds = Seeds::derive(cfg.seed);
    let train = cfg.train_config(seeds.train);
    let runs = sample_seeds
        .par_iter()
        .enumerate()
        .map(|(run, &sample_seed)| {
            let attempt = || -> Result<StabilityRun> {
                let sample = corpus.bootstrap_sample(fraction, sample_seed)?;
                let model = train_skipgram(&sample, &train).map_err(|e| e.in_stage("embed"))?;
                let analysis = analyze(&model, setup, &seeds)?;
                Ok(StabilityRun {
                    run,
                    sample_seed,
                    comments: sample.len(),
                    vocab_size: model.len(),
                    table: analysis.table,
                })
            };
            attempt().map_err(|e| Error::Run {
                run,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut labels = Vec::new();
    for side in [1u8, 2] {
        let mut ranks: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for run in &runs {
            for row in &run.table.rows {
                if let Some(rank) = if side == 1 { row.rank1 } else { row.rank2 } {
                    ranks.entry(&row.label).or_default().push(rank as f64);
                }
            }
        }
        for (label, values) in ranks {
            let (mean_rank, rank_variance) = mean_variance(&values);
            labels.push(LabelStability {
                label: label.to_string(),
                side,
                runs_present: values.len(),
                mean_rank,
                rank_variance,
            });
        }
    }
    let tops = |side: u8| -> Vec<Vec<&str>> {
        runs.iter()
            .map(|r| r.table.side(side).into_iter().take(TOP_N).collect())
            .collect()
    };
    let overlap1 = overlap_matrix(&tops(1));
    let overlap2 = overlap_matrix(&tops(2));
    Ok(StabilityReport {
        fraction,
        seed,
        labels,
        top_n: TOP_N,
        overlap1,
        overlap2,
        runs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GranularityCell {
    pub r: f64,
    pub k: usize,
    pub unique_labels: usize,
    pub intra_similarity: f64,
    /// Top labels with the share of clusters carrying them.
    pub top_labels: Vec<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GranularityReport {
    pub cells: Vec<GranularityCell>,
    /// Whether the unique label count never drops as r grows (reported only).
    pub unique_labels_non_decreasing: bool,
    /// Shared top labels between consecutive cells.
    pub adjacent_overlap: Vec<usize>,
}

/// Cluster and label the same words at several reduction factors.
pub fn granularity_sweep<S: AsRef<str> + Sync>(
    model: &EmbeddingModel,
    words: &[S],
    r_values: &[f64],
    semantic: &SemanticLexicon,
    sentiment: &SentimentLexicon,
    mode: LabelMode,
    seed: u64,
) -> Result<GranularityReport> {
    if let Some(bad) = r_values.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
        return Err(Error::Argument(format!("reduction factor {bad} is outside (0, 1]")));
    }
    let cells = r_values
        .par_iter()
        .map(|&r| {
            let partition = kmeans_partition(model, words, r, seed)?;
            let labeled = label_clusters(&partition, semantic, sentiment, mode)?;
            let ranks = rank_labels(&labeled);
            let total = labeled.len() as f64;
            Ok(GranularityCell {
                r,
                k: partition.k,
                unique_labels: ranks.len(),
                intra_similarity: intra_similarity(model, &partition)?,
                top_labels: ranks
                    .iter()
                    .take(TOP_N)
                    .map(|l| (l.label.clone(), l.clusters as f64 / total))
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut by_r: Vec<&GranularityCell> = cells.iter().collect();
    by_r.sort_by(|a, b| a.r.total_cmp(&b.r));
    let unique_labels_non_decreasing = by_r.windows(2).all(|w| w[0].unique_labels <= w[1].unique_labels);
    let adjacent_overlap = cells
        .windows(2)
        .map(|w| {
            let a: BTreeSet<&str> = w[0].top_labels.iter().map(|(l, _)| l.as_str()).collect();
            w[1].top_labels.iter().filter(|(l, _)| a.contains(l.as_str())).count()
        })
        .collect();
    Ok(GranularityReport {
        cells,
        unique_labels_non_decreasing,
        adjacent_overlap,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinCountCell {
    pub min_count: u64,
    pub vocab_size: Option<usize>,
    /// Vocabulary words passing the POS filter.
    pub filtered_vocab_size: Option<usize>,
    pub top1: Vec<String>,
    pub top2: Vec<String>,
    /// Top labels shared with the first successful cell, per side.
    pub agreement1: Option<usize>,
    pub agreement2: Option<usize>,
    pub error: Option<String>,
}

/// Retrain at each frequency threshold and compare the top labels.
///
/// A threshold that fails (e.g. empty vocabulary) is recorded with its error
/// and the sweep continues.
pub fn min_count_sweep(
    corpus: &TokenizedCorpus,
    thresholds: &[u64],
    cfg: &PipelineConfig,
    setup: &Setup,
) -> Result<Vec<MinCountCell>> {
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Argument("thresholds must be sorted ascending".into()));
    }
    let seeds = Seeds::derive(cfg.seed);
    let mut cells: Vec<MinCountCell> = thresholds
        .par_iter()
        .map(|&min_count| {
            let mut train = cfg.train_config(seeds.train);
            train.min_count = min_count;
            let mut cell = MinCountCell {
                min_count,
                vocab_size: None,
                filtered_vocab_size: None,
                top1: Vec::new(),
                top2: Vec::new(),
                agreement1: None,
                agreement2: None,
                error: None,
            };
            // sizes are reported even when a later stage fails
            let outcome = build_vocab(corpus, min_count).and_then(|vocab| {
                cell.vocab_size = Some(vocab.len());
                cell.filtered_vocab_size = Some(
                    vocab
                        .words()
                        .iter()
                        .filter(|w| setup.allowed.is_empty() || setup.allowed.contains(&setup.lexicons.pos.tag(w)))
                        .count(),
                );
                let model = train_skipgram(corpus, &train)?;
                Ok(analyze(&model, setup, &seeds)?.table)
            });
            match outcome {
                Ok(table) => {
                    cell.top1 = table.side(1).into_iter().take(TOP_N).map(str::to_string).collect();
                    cell.top2 = table.side(2).into_iter().take(TOP_N).map(str::to_string).collect();
                }
                Err(e) => {
                    log::warn!("min_count {min_count} failed: {e}");
                    cell.error = Some(e.to_string());
                }
            }
            cell
        })
        .collect();
    if let Some(base) = cells.iter().find(|c| c.error.is_none()).cloned() {
        for cell in cells.iter_mut().filter(|c| c.error.is_none()) {
            cell.agreement1 = Some(cell.top1.iter().filter(|l| base.top1.contains(l)).count());
            cell.agreement2 = Some(cell.top2.iter().filter(|l| base.top2.contains(l)).count());
        }
    }
    Ok(cells)
}
