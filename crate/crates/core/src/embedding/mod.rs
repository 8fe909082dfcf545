//! Word embeddings: vocabulary, skip-gram training, word2vec file formats and
//! the vector geometry (cosine, centroid) everything downstream relies on.

mod skipgram;
mod vocab;
mod word2vec;

use sha2::{Digest, Sha256};

pub use skipgram::{train_skipgram, TrainConfig};
pub use vocab::{build_vocab, Vocabulary};
pub use word2vec::{
    load_embeddings, read_word2vec_binary, read_word2vec_text, save_embeddings,
    write_word2vec_binary, write_word2vec_text, ModelFormat,
};

use crate::error::{Error, Result};

/// Dense word vectors over a vocabulary, stored row-major.
///
/// Values are kept in `f64`; trained and word2vec-loaded models only hold
/// values representable in `f32`, which keeps the binary format lossless.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingModel {
    vocab: Vocabulary,
    dim: usize,
    matrix: Vec<f64>,
}

impl EmbeddingModel {
    pub fn new(vocab: Vocabulary, dim: usize, matrix: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        if matrix.len() != vocab.len() * dim {
            return Err(Error::Config(format!(
                "matrix has {} values, expected {} x {}",
                matrix.len(),
                vocab.len(),
                dim
            )));
        }
        Ok(EmbeddingModel { vocab, dim, matrix })
    }

    /// Build a model from `(word, vector)` pairs; every vector must have the
    /// same length. Frequencies are zero.
    pub fn from_vectors<S, V>(rows: impl IntoIterator<Item = (S, V)>) -> Result<Self>
    where
        S: Into<String>,
        V: AsRef<[f64]>,
    {
        let mut words = Vec::new();
        let mut matrix = Vec::new();
        let mut dim = None;
        for (word, vector) in rows {
            let vector = vector.as_ref();
            match dim {
                None => dim = Some(vector.len()),
                Some(d) if d != vector.len() => {
                    return Err(Error::Config(format!(
                        "vector for row {} has dimension {}, expected {d}",
                        words.len(),
                        vector.len()
                    )))
                }
                _ => {}
            }
            words.push(word.into());
            matrix.extend_from_slice(vector);
        }
        let vocab = Vocabulary::from_words(words);
        if vocab.len() * dim.unwrap_or(0) != matrix.len() {
            return Err(Error::Config("duplicate words in vector list".into()));
        }
        Self::new(vocab, dim.unwrap_or(0), matrix)
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn vocab_mut(&mut self) -> &mut Vocabulary {
        &mut self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn row(&self, idx: usize) -> &[f64] {
        &self.matrix[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn row_mut(&mut self, idx: usize) -> &mut [f64] {
        &mut self.matrix[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.vocab.index_of(word).map(|i| self.row(i))
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    /// SHA-256 over words and vector bits, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.len() as u64).to_le_bytes());
        hasher.update((self.dim as u64).to_le_bytes());
        for (i, word) in self.vocab.words().iter().enumerate() {
            hasher.update(word.as_bytes());
            hasher.update([0u8]);
            for v in self.row(i) {
                hasher.update(v.to_bits().to_le_bytes());
            }
        }
        to_hex(&hasher.finalize())
    }
}

pub(crate) fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Cosine similarity `u·v / (‖u‖ ‖v‖)`, clamped to [-1, 1].
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Domain(format!(
            "cosine of vectors with dimensions {} and {}",
            u.len(),
            v.len()
        )));
    }
    let uu = dot(u, u);
    let vv = dot(v, v);
    if uu == 0.0 || vv == 0.0 {
        return Err(Error::Domain("cosine of a zero vector".into()));
    }
    Ok((dot(u, v) / (uu * vv).sqrt()).clamp(-1.0, 1.0))
}

/// Mean vector of a word set plus the words that were not in the vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct Centroid {
    pub vector: Vec<f64>,
    pub missing: Vec<String>,
}

/// Unweighted mean of the in-vocabulary words' vectors.
///
/// Out-of-vocabulary words are skipped with a warning; if none remain the
/// result is a target-set error naming every missing word.
pub fn centroid<S: AsRef<str>>(model: &EmbeddingModel, words: &[S]) -> Result<Centroid> {
    named_centroid(model, "", words)
}

pub(crate) fn named_centroid<S: AsRef<str>>(
    model: &EmbeddingModel,
    name: &str,
    words: &[S],
) -> Result<Centroid> {
    let mut sum = vec![0.0; model.dim()];
    let mut present = 0usize;
    let mut missing = Vec::new();
    for word in words {
        let word = word.as_ref();
        match model.vector(word) {
            Some(v) => {
                present += 1;
                sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
            }
            None => missing.push(word.to_string()),
        }
    }
    if present == 0 {
        return Err(Error::TargetSet {
            name: name.to_string(),
            missing,
        });
    }
    if !missing.is_empty() {
        log::warn!("target set {name:?}: skipping out-of-vocabulary words {missing:?}");
    }
    let n = present as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    Ok(Centroid {
        vector: sum,
        missing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_cosine(u: &[f64], v: &[f64]) -> f64 {
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

    #[test]
    fn cosine_basics() {
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(cosine(&[3.0, -4.0, 2.5], &[3.0, -4.0, 2.5]).unwrap(), 1.0);
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::Domain(_))));
        assert!(matches!(cosine(&[1.0], &[1.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn cosine_matches_scalar_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let d = rng.gen_range(1..64);
            let u: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            assert!((cosine(&u, &v).unwrap() - naive_cosine(&u, &v)).abs() < 1e-9);
        }
    }

    fn toy() -> EmbeddingModel {
        EmbeddingModel::from_vectors([
            ("a", vec![1.0, 2.0, 3.0]),
            ("b", vec![-1.0, 0.5, 0.0]),
            ("c", vec![0.0, 0.0, 4.0]),
        ])
        .unwrap()
    }

    #[test]
    fn centroid_of_single_and_duplicate_words() {
        let m = toy();
        assert_eq!(centroid(&m, &["a"]).unwrap().vector, m.vector("a").unwrap());
        assert_eq!(centroid(&m, &["b", "b"]).unwrap().vector, m.vector("b").unwrap());
    }

    #[test]
    fn centroid_reports_missing_words() {
        let m = toy();
        let c = centroid(&m, &["a", "zzz"]).unwrap();
        assert_eq!(c.missing, ["zzz"]);
        assert_eq!(c.vector, m.vector("a").unwrap());
        match centroid(&m, &["x", "y"]) {
            Err(Error::TargetSet { missing, .. }) => assert_eq!(missing, ["x", "y"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn centroid_matches_elementwise_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<(String, Vec<f64>)> = (0..40)
            .map(|i| (format!("w{i}"), (0..16).map(|_| rng.gen_range(-2.0..2.0)).collect()))
            .collect();
        let model = EmbeddingModel::from_vectors(rows.clone()).unwrap();
        for _ in 0..20 {
            let picks: Vec<usize> = (0..5).map(|_| rng.gen_range(0..40)).collect();
            let words: Vec<&str> = picks.iter().map(|&i| rows[i].0.as_str()).collect();
            let got = centroid(&model, &words).unwrap().vector;
            for k in 0..16 {
                let mut total = 0.0;
                for &i in &picks {
                    total += rows[i].1[k];
                }
                assert!((got[k] - total / 5.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_ragged_rows() {
        let err = EmbeddingModel::from_vectors([("a", vec![1.0]), ("b", vec![1.0, 2.0])]);
        assert!(err.is_err());
    }

    proptest! {
        #[test]
        fn cosine_symmetric_and_scale_invariant(
            u in prop::collection::vec(-10.0f64..10.0, 8),
            v in prop::collection::vec(-10.0f64..10.0, 8),
            alpha in 1e-3f64..1e3,
        ) {
            prop_assume!(norm(&u) > 1e-6 && norm(&v) > 1e-6);
            let c = cosine(&u, &v).unwrap();
            prop_assert!((c - cosine(&v, &u).unwrap()).abs() < 1e-9);
            let scaled: Vec<f64> = u.iter().map(|x| x * alpha).collect();
            prop_assert!((c - cosine(&scaled, &v).unwrap()).abs() < 1e-9);
            prop_assert!((-1.0..=1.0).contains(&c));
        }
    }
}
