//! Skip-gram with negative sampling.
//!
//! Each (centre, context) pair inside a randomly shrunk window is a positive
//! example; `negatives` words drawn from the unigram^0.75 distribution are the
//! negative examples. Learning rate decays linearly over all epochs.
//!
//! With `workers > 1` threads update the shared matrices without locking
//! (Hogwild-style), so results vary between runs. A single worker with a
//! fixed seed is bit-reproducible.

use std::cell::UnsafeCell;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{build_vocab, EmbeddingModel, Vocabulary};
use crate::corpus::TokenizedCorpus;
use crate::error::{Error, Result};

const MAX_LOGIT: f32 = 6.0;
const LR_UPDATE_INTERVAL: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub min_count: u64,
    pub epochs: usize,
    pub negatives: usize,
    pub alpha: f32,
    pub min_alpha: f32,
    /// Frequent-word subsampling threshold (word2vec `-sample`); off when `None`.
    pub subsample: Option<f64>,
    pub seed: u64,
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 200,
            window: 4,
            min_count: 10,
            epochs: 5,
            negatives: 5,
            alpha: 0.025,
            min_alpha: 1e-4,
            subsample: None,
            seed: 1,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dim", self.dim),
            ("window", self.window),
            ("epochs", self.epochs),
            ("negatives", self.negatives),
            ("workers", self.workers),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.min_count == 0 {
            return Err(Error::Config("min_count must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.min_alpha > 0.0 && self.min_alpha <= self.alpha) {
            return Err(Error::Config(
                "learning rates must satisfy 0 < min_alpha <= alpha".into(),
            ));
        }
        if let Some(t) = self.subsample {
            if !(t > 0.0) {
                return Err(Error::Config("subsample threshold must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Row-major `f32` matrix shared between training threads.
struct SharedMatrix {
    data: UnsafeCell<Vec<f32>>,
    dim: usize,
}

// Concurrent unsynchronised row updates are the Hogwild training scheme;
// each individual update is a plain f32 read-modify-write.
unsafe impl Sync for SharedMatrix {}

impl SharedMatrix {
    fn new(data: Vec<f32>, dim: usize) -> Self {
        SharedMatrix {
            data: UnsafeCell::new(data),
            dim,
        }
    }

    /// # Safety
    /// Callers must not hold two live references to the same row within one
    /// thread.
    #[allow(clippy::mut_from_ref)]
    unsafe fn row(&self, idx: usize) -> &mut [f32] {
        let data = &mut *self.data.get();
        &mut data[idx * self.dim..(idx + 1) * self.dim]
    }

    fn into_inner(self) -> Vec<f32> {
        self.data.into_inner()
    }
}

struct Trainer<'a> {
    cfg: &'a TrainConfig,
    input: SharedMatrix,
    output: SharedMatrix,
    noise: WeightedIndex<f64>,
    keep_prob: Option<Vec<f32>>,
    total_words: usize,
    processed: AtomicUsize,
}

impl Trainer<'_> {
    fn alpha(&self) -> f32 {
        let planned = (self.cfg.epochs * self.total_words) as f32 + 1.0;
        let progress = self.processed.load(Ordering::Relaxed) as f32 / planned;
        (self.cfg.alpha - (self.cfg.alpha - self.cfg.min_alpha) * progress).max(self.cfg.min_alpha)
    }

    fn train_pair(&self, center: usize, context: usize, alpha: f32, rng: &mut ChaCha8Rng, grad: &mut [f32]) {
        // SAFETY: `center` row of input and rows of output live in different
        // matrices; each output row reference is dropped before the next.
        let hidden = unsafe { self.input.row(center) };
        grad.iter_mut().for_each(|g| *g = 0.0);
        for n in 0..=self.cfg.negatives {
            let (target, label) = if n == 0 {
                (context, 1.0)
            } else {
                let sample = self.noise.sample(rng);
                if sample == context {
                    continue;
                }
                (sample, 0.0)
            };
            let out = unsafe { self.output.row(target) };
            let logit: f32 = hidden.iter().zip(out.iter()).map(|(h, o)| h * o).sum();
            let logit = logit.clamp(-MAX_LOGIT, MAX_LOGIT);
            let g = (label - 1.0 / (1.0 + (-logit).exp())) * alpha;
            for ((gr, o), h) in grad.iter_mut().zip(out.iter_mut()).zip(hidden.iter()) {
                *gr += g * *o;
                *o += g * h;
            }
        }
        hidden.iter_mut().zip(grad.iter()).for_each(|(h, g)| *h += g);
    }

    fn run_worker(&self, sentences: &[Vec<u32>], seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut grad = vec![0.0f32; self.cfg.dim];
        let mut kept: Vec<usize> = Vec::new();
        let mut since_update = 0usize;
        let mut alpha = self.alpha();
        for _ in 0..self.cfg.epochs {
            for sentence in sentences {
                kept.clear();
                match &self.keep_prob {
                    Some(keep) => kept.extend(
                        sentence
                            .iter()
                            .map(|&w| w as usize)
                            .filter(|&w| keep[w] >= 1.0 || rng.gen::<f32>() < keep[w]),
                    ),
                    None => kept.extend(sentence.iter().map(|&w| w as usize)),
                }
                for (i, &center) in kept.iter().enumerate() {
                    let reduced = rng.gen_range(0..self.cfg.window);
                    let span = self.cfg.window - reduced;
                    let lo = i.saturating_sub(span);
                    let hi = (i + span).min(kept.len() - 1);
                    for (j, &context) in kept.iter().enumerate().take(hi + 1).skip(lo) {
                        if j != i {
                            self.train_pair(center, context, alpha, &mut rng, &mut grad);
                        }
                    }
                }
                since_update += sentence.len();
                if since_update >= LR_UPDATE_INTERVAL {
                    self.processed.fetch_add(since_update, Ordering::Relaxed);
                    since_update = 0;
                    alpha = self.alpha();
                }
            }
        }
    }
}

/// Train skip-gram embeddings over the corpus vocabulary filtered by
/// `cfg.min_count`.
pub fn train_skipgram(corpus: &TokenizedCorpus, cfg: &TrainConfig) -> Result<EmbeddingModel> {
    cfg.validate()?;
    let vocab = build_vocab(corpus, cfg.min_count)?;
    train_with_vocab(corpus, vocab, cfg)
}

pub(crate) fn train_with_vocab(
    corpus: &TokenizedCorpus,
    vocab: Vocabulary,
    cfg: &TrainConfig,
) -> Result<EmbeddingModel> {
    let sentences: Vec<Vec<u32>> = corpus
        .sentences()
        .map(|s| {
            s.iter()
                .filter_map(|w| vocab.index_of(w).map(|i| i as u32))
                .collect::<Vec<_>>()
        })
        .filter(|s| !s.is_empty())
        .collect();
    let total_words: usize = sentences.iter().map(Vec::len).sum();
    if total_words <= cfg.window {
        return Err(Error::Config(format!(
            "corpus has {total_words} in-vocabulary tokens, fewer than one window of {}",
            cfg.window + 1
        )));
    }

    let dim = cfg.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let input: Vec<f32> = (0..vocab.len() * dim)
        .map(|_| (rng.gen::<f32>() - 0.5) / dim as f32)
        .collect();
    let noise = WeightedIndex::new(vocab.counts().iter().map(|&c| (c as f64).powf(0.75)))
        .map_err(|e| Error::Config(format!("noise distribution: {e}")))?;
    let keep_prob = cfg.subsample.map(|t| {
        let threshold = t * total_words as f64;
        vocab
            .counts()
            .iter()
            .map(|&c| {
                let c = c as f64;
                (((c / threshold).sqrt() + 1.0) * threshold / c) as f32
            })
            .collect()
    });

    let trainer = Trainer {
        cfg,
        input: SharedMatrix::new(input, dim),
        output: SharedMatrix::new(vec![0.0; vocab.len() * dim], dim),
        noise,
        keep_prob,
        total_words,
        processed: AtomicUsize::new(0),
    };

    let workers = cfg.workers.min(sentences.len()).max(1);
    if workers == 1 {
        trainer.run_worker(&sentences, cfg.seed.wrapping_add(1));
    } else {
        let chunk = sentences.len().div_ceil(workers);
        std::thread::scope(|scope| {
            for (w, part) in sentences.chunks(chunk).enumerate() {
                let trainer = &trainer;
                scope.spawn(move || trainer.run_worker(part, cfg.seed.wrapping_add(1 + w as u64)));
            }
        });
    }

    let matrix: Vec<f64> = trainer.input.into_inner().into_iter().map(f64::from).collect();
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("training diverged to non-finite values".into()));
    }
    EmbeddingModel::new(vocab, dim, matrix)
}
