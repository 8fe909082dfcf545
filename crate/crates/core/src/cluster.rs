//! k-means over unit-length word vectors.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{cosine, norm, EmbeddingModel};
use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 300;

/// Disjoint word clusters covering the clustered words.
///
/// Centroids live in the space the clustering ran in: each is the mean of
/// its members' L2-normalized vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterPartition {
    pub clusters: Vec<Vec<String>>,
    pub centroids: Vec<Vec<f64>>,
    pub r: f64,
    pub k: usize,
    pub seed: u64,
}

#[derive(Serialize)]
struct ExportedCluster<'a> {
    label: Option<&'a str>,
    words: &'a [String],
}

impl ClusterPartition {
    /// A partition with explicitly given centroids.
    pub fn new(clusters: Vec<Vec<String>>, centroids: Vec<Vec<f64>>, r: f64, seed: u64) -> Result<Self> {
        if clusters.len() != centroids.len() {
            return Err(Error::Structure(format!(
                "{} clusters but {} centroids",
                clusters.len(),
                centroids.len()
            )));
        }
        let mut seen = HashSet::new();
        for word in clusters.iter().flatten() {
            if !seen.insert(word.as_str()) {
                return Err(Error::Structure(format!("{word:?} appears in two clusters")));
            }
        }
        Ok(ClusterPartition {
            k: clusters.len(),
            clusters,
            centroids,
            r,
            seed,
        })
    }

    /// A partition of the given clusters with centroids computed from `model`.
    pub fn from_clusters(model: &EmbeddingModel, clusters: Vec<Vec<String>>, r: f64, seed: u64) -> Result<Self> {
        let centroids = clusters
            .iter()
            .map(|members| {
                let rows = members
                    .iter()
                    .map(|w| unit_vector(model, w))
                    .collect::<Result<Vec<_>>>()?;
                Ok(mean(rows.iter().map(Vec::as_slice), model.dim()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(clusters, centroids, r, seed)
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn word_count(&self) -> usize {
        self.clusters.iter().map(Vec::len).sum()
    }

    /// `[{"label": null, "words": [...]}, ...]`
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<ExportedCluster> = self
            .clusters
            .iter()
            .map(|words| ExportedCluster { label: None, words })
            .collect();
        serde_json::to_value(rows).expect("plain data serializes")
    }
}

fn unit_vector(model: &EmbeddingModel, word: &str) -> Result<Vec<f64>> {
    let v = model.vector(word).ok_or_else(|| Error::Lookup(word.to_string()))?;
    let n = norm(v);
    if n == 0.0 {
        return Err(Error::Domain(format!("zero vector for {word:?}")));
    }
    Ok(v.iter().map(|x| x / n).collect())
}

fn mean<'a>(rows: impl Iterator<Item = &'a [f64]>, dim: usize) -> Vec<f64> {
    let mut sum = vec![0.0; dim];
    let mut n = 0usize;
    for row in rows {
        sum.iter_mut().zip(row).for_each(|(s, x)| *s += x);
        n += 1;
    }
    if n > 0 {
        sum.iter_mut().for_each(|s| *s /= n as f64);
    }
    sum
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the closest center; ties go to the lower index.
fn nearest_center(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Number of clusters for `n` words at reduction factor `r`.
pub fn cluster_count(n: usize, r: f64) -> usize {
    ((r * n as f64).round() as usize).clamp(1, n.max(1))
}

fn kmeans_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.gen_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            // guard against rounding leaving us on a zero-weight point
            if d2[chosen] == 0.0 {
                chosen = d2.iter().rposition(|&d| d > 0.0).unwrap_or(chosen);
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        let c = points[pick].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centers.push(c);
    }
    centers
}

/// Lloyd iterations from k-means++ seeds. Returns the assignment vector.
fn lloyd(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<usize> {
    let dim = points[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = kmeans_plus_plus(points, k, &mut rng);
    let mut assign: Vec<usize> = vec![usize::MAX; points.len()];
    for _ in 0..MAX_ITERATIONS {
        let next: Vec<(usize, f64)> = points.par_iter().map(|p| nearest_center(p, &centers)).collect();
        let mut labels: Vec<usize> = next.iter().map(|&(j, _)| j).collect();
        repair_empty(points, &mut labels, &centers, k);
        if labels == assign {
            break;
        }
        assign = labels;
        centers = (0..k)
            .map(|j| {
                mean(
                    points.iter().zip(&assign).filter(|&(_, &a)| a == j).map(|(p, _)| p.as_slice()),
                    dim,
                )
            })
            .collect();
    }
    assign
}

/// Give every empty cluster the point farthest from its current center,
/// taken from a cluster that keeps at least one member.
fn repair_empty(points: &[Vec<f64>], labels: &mut [usize], centers: &[Vec<f64>], k: usize) {
    let mut sizes = vec![0usize; k];
    labels.iter().for_each(|&j| sizes[j] += 1);
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            let j = labels[i];
            if sizes[j] < 2 {
                continue;
            }
            let d = sq_dist(p, &centers[j]);
            if best.map_or(true, |(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        if let Some((i, _)) = best {
            sizes[labels[i]] -= 1;
            labels[i] = empty;
            sizes[empty] = 1;
        }
    }
}

/// Cluster `words` into `max(1, round(r·n))` groups.
///
/// Duplicate words are dropped with a warning. Clusters are ordered by the
/// position of their first member in `words`, and members keep input order.
pub fn kmeans_partition<S: AsRef<str>>(
    model: &EmbeddingModel,
    words: &[S],
    r: f64,
    seed: u64,
) -> Result<ClusterPartition> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Argument(format!("reduction factor {r} is outside (0, 1]")));
    }
    let mut seen = HashSet::new();
    let mut unique = Vec::with_capacity(words.len());
    for w in words {
        let w = w.as_ref();
        if seen.insert(w) {
            unique.push(w.to_string());
        } else {
            log::warn!("dropping duplicate word {w:?} before clustering");
        }
    }
    if unique.is_empty() {
        return Err(Error::Argument("no words to cluster".into()));
    }
    let points = unique
        .iter()
        .map(|w| unit_vector(model, w))
        .collect::<Result<Vec<_>>>()?;
    let n = unique.len();
    let k = cluster_count(n, r);
    let assign: Vec<usize> = if k == n { (0..n).collect() } else { lloyd(&points, k, seed) };

    let mut order: Vec<usize> = Vec::with_capacity(k);
    let mut slot = vec![usize::MAX; k];
    for &j in &assign {
        if slot[j] == usize::MAX {
            slot[j] = order.len();
            order.push(j);
        }
    }
    let mut clusters: Vec<Vec<String>> = vec![Vec::new(); order.len()];
    let mut members: Vec<Vec<&[f64]>> = vec![Vec::new(); order.len()];
    for (i, &j) in assign.iter().enumerate() {
        clusters[slot[j]].push(unique[i].clone());
        members[slot[j]].push(&points[i]);
    }
    let centroids = members
        .into_iter()
        .map(|rows| mean(rows.into_iter(), model.dim()))
        .collect();
    ClusterPartition::new(clusters, centroids, r, seed)
}

/// Mean of the clusters' mean pairwise cosines; singletons count as 1.
pub fn intra_similarity(model: &EmbeddingModel, partition: &ClusterPartition) -> Result<f64> {
    if partition.is_empty() {
        return Err(Error::Structure("empty partition".into()));
    }
    let mut total = 0.0;
    for members in &partition.clusters {
        let vectors = members
            .iter()
            .map(|w| model.vector(w).ok_or_else(|| Error::Lookup(w.clone())))
            .collect::<Result<Vec<_>>>()?;
        if vectors.len() < 2 {
            total += 1.0;
            continue;
        }
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for i in 0..vectors.len() {
            for j in i + 1..vectors.len() {
                sum += cosine(vectors[i], vectors[j])?;
                pairs += 1;
            }
        }
        total += sum / pairs as f64;
    }
    Ok(total / partition.len() as f64)
}

/// The other cluster whose centroid is most cosine-similar to cluster `index`.
/// Ties go to the lower index.
pub fn nearest_cluster(partition: &ClusterPartition, index: usize) -> Result<usize> {
    nearest_among(partition, index, |_| true)?
        .ok_or_else(|| Error::Structure("no other cluster to compare with".into()))
}

/// Like [`nearest_cluster`] but restricted to clusters accepted by `allow`.
pub(crate) fn nearest_among(
    partition: &ClusterPartition,
    index: usize,
    allow: impl Fn(usize) -> bool,
) -> Result<Option<usize>> {
    if partition.len() < 2 {
        return Err(Error::Structure(format!(
            "nearest cluster needs at least 2 clusters, partition has {}",
            partition.len()
        )));
    }
    let Some(own) = partition.centroids.get(index) else {
        return Err(Error::Argument(format!("cluster index {index} out of range")));
    };
    let mut best: Option<(usize, f64)> = None;
    for (j, c) in partition.centroids.iter().enumerate() {
        if j == index || !allow(j) {
            continue;
        }
        // a zero centroid (antipodal members) is never similar to anything
        let sim = cosine(own, c).unwrap_or(f64::NEG_INFINITY);
        if best.map_or(true, |(_, b)| sim > b) {
            best = Some((j, sim));
        }
    }
    Ok(best.map(|(j, _)| j))
}
