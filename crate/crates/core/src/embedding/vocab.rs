use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::corpus::TokenizedCorpus;
use crate::error::{Error, Result};

/// Word inventory of an embedding model with corpus frequencies.
///
/// Words are indexed densely from zero. Vocabularies built from a corpus are
/// ordered by descending frequency, ties broken lexicographically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    min_count: u64,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Vocabulary with explicit counts, in the given order. Later duplicates
    /// are dropped.
    pub fn from_counts(entries: impl IntoIterator<Item = (String, u64)>, min_count: u64) -> Self {
        let mut words = Vec::new();
        let mut counts = Vec::new();
        let mut index = HashMap::new();
        for (word, count) in entries {
            if index.contains_key(&word) {
                continue;
            }
            index.insert(word.clone(), words.len());
            words.push(word);
            counts.push(count);
        }
        Vocabulary {
            words,
            counts,
            min_count,
            index,
        }
    }

    /// Vocabulary without frequency information (all counts zero).
    pub fn from_words(words: impl IntoIterator<Item = String>) -> Self {
        Self::from_counts(words.into_iter().map(|w| (w, 0)), 0)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn word(&self, idx: usize) -> &str {
        &self.words[idx]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn count(&self, idx: usize) -> u64 {
        self.counts[idx]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn frequency(&self, word: &str) -> Option<u64> {
        self.index_of(word).map(|i| self.counts[i])
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// Overwrite counts from a word → count table; words absent from the
    /// table keep their current count.
    pub fn apply_counts(&mut self, table: &HashMap<String, u64>) {
        for (word, count) in self.words.iter().zip(self.counts.iter_mut()) {
            if let Some(&c) = table.get(word) {
                *count = c;
            }
        }
    }

    /// Write `word count` lines.
    pub fn write_counts(&self, mut out: impl Write) -> Result<()> {
        for (w, c) in self.words.iter().zip(&self.counts) {
            writeln!(out, "{w} {c}")?;
        }
        Ok(())
    }

    /// Read a `word count` table as written by [`Vocabulary::write_counts`].
    pub fn read_counts(input: impl BufRead) -> Result<HashMap<String, u64>> {
        let mut table = HashMap::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(word), Some(count), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Format {
                    line: i + 1,
                    message: "expected `word count`".into(),
                });
            };
            let count = count.parse().map_err(|_| Error::Format {
                line: i + 1,
                message: format!("bad count {count:?}"),
            })?;
            table.entry(word.to_string()).or_insert(count);
        }
        Ok(table)
    }
}

/// Count tokens and keep those occurring at least `min_count` times.
pub fn build_vocab(corpus: &TokenizedCorpus, min_count: u64) -> Result<Vocabulary> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for token in corpus.sentences().flatten() {
        *counts.entry(token.as_str()).or_insert(0) += 1;
    }
    let mut kept: Vec<(&str, u64)> = counts.into_iter().filter(|&(_, c)| c >= min_count).collect();
    if kept.is_empty() {
        return Err(Error::Config(format!(
            "no token occurs at least {min_count} times; vocabulary is empty"
        )));
    }
    kept.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Ok(Vocabulary::from_counts(
        kept.into_iter().map(|(w, c)| (w.to_string(), c)),
        min_count,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filters_by_min_count() {
        let corpus = TokenizedCorpus::from_texts(["a a b"]);
        let vocab = build_vocab(&corpus, 2).unwrap();
        assert_eq!(vocab.words(), ["a"]);
        assert_eq!(vocab.frequency("a"), Some(2));
        assert!(!vocab.contains("b"));
    }

    #[test]
    fn min_count_one_keeps_everything() {
        let corpus = TokenizedCorpus::from_texts(["x y z", "y z", "z"]);
        let vocab = build_vocab(&corpus, 1).unwrap();
        assert_eq!(vocab.words(), ["z", "y", "x"]);
        assert_eq!(vocab.counts(), [3, 2, 1]);
        assert_eq!(vocab.len(), corpus.stats().unique_tokens);
    }

    #[test]
    fn empty_after_filtering_is_config_error() {
        let corpus = TokenizedCorpus::from_texts(["a b c"]);
        assert!(matches!(build_vocab(&corpus, 5), Err(Error::Config(_))));
    }

    #[test]
    fn counts_round_trip() {
        let vocab = Vocabulary::from_counts([("b".to_string(), 4), ("a".to_string(), 2)], 1);
        let mut buf = Vec::new();
        vocab.write_counts(&mut buf).unwrap();
        let table = Vocabulary::read_counts(buf.as_slice()).unwrap();
        let mut other = Vocabulary::from_words(["a".to_string(), "b".to_string()]);
        other.apply_counts(&table);
        assert_eq!(other.frequency("b"), Some(4));
        assert_eq!(other.frequency("a"), Some(2));
    }
}
