#![allow(dead_code)]

use biaslens::bias::{PosLexicon, PosTag};
use biaslens::embedding::{EmbeddingModel, Vocabulary};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const TAGS: [PosTag; 4] = [PosTag::Noun, PosTag::Adjective, PosTag::Verb, PosTag::Other];

/// Random vectors with random frequencies. About one word in ten copies an
/// earlier vector so that exact score ties occur.
pub fn random_model(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> EmbeddingModel {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        let row = if i > 0 && rng.gen_bool(0.1) {
            rows[rng.gen_range(0..i)].clone()
        } else {
            (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        rows.push(row);
        entries.push((format!("w{i:04}"), rng.gen_range(1..6u64)));
    }
    let vocab = Vocabulary::from_counts(entries, 1);
    EmbeddingModel::new(vocab, dim, rows.concat()).unwrap()
}

pub fn random_tags(rng: &mut ChaCha8Rng, model: &EmbeddingModel) -> PosLexicon {
    let words = model
        .vocab()
        .words()
        .iter()
        .map(|w| (w.clone(), TAGS[rng.gen_range(0..TAGS.len())]));
    PosLexicon::new(words, [])
}

pub fn pick(rng: &mut ChaCha8Rng, model: &EmbeddingModel, count: usize) -> Vec<String> {
    rand::seq::index::sample(rng, model.len(), count)
        .into_iter()
        .map(|i| model.vocab().word(i).to_string())
        .collect()
}

pub fn naive_cosine(u: &[f64], v: &[f64]) -> f64 {
    let mut d = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for i in 0..u.len() {
        d += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    d / (nu.sqrt() * nv.sqrt())
}

pub fn naive_mean(model: &EmbeddingModel, words: &[String]) -> Vec<f64> {
    let mut out = vec![0.0; model.dim()];
    for w in words {
        let v = model.vector(w).unwrap();
        for k in 0..out.len() {
            out[k] += v[k];
        }
    }
    for x in out.iter_mut() {
        *x /= words.len() as f64;
    }
    out
}
