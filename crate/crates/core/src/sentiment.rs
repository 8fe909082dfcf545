//! Prior word polarity from a valence lexicon.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};
use crate::resources;

/// Word → polarity in [-1, 1].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SentimentLexicon {
    scores: HashMap<String, f64>,
}

impl SentimentLexicon {
    pub fn new(entries: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let mut scores = HashMap::new();
        for (word, score) in entries {
            if !(-1.0..=1.0).contains(&score) {
                return Err(Error::Config(format!("polarity {score} for {word:?} is outside [-1, 1]")));
            }
            scores.entry(word.to_lowercase()).or_insert(score);
        }
        Ok(SentimentLexicon { scores })
    }

    /// Parse `word<TAB>score` lines.
    pub fn parse_tsv(input: impl BufRead) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let parsed = line
                .split_once('\t')
                .and_then(|(w, s)| s.trim().parse::<f64>().ok().map(|s| (w.trim().to_string(), s)));
            let Some(entry) = parsed else {
                return Err(Error::Format {
                    line: i + 1,
                    message: "expected `word<TAB>score`".into(),
                });
            };
            entries.push(entry);
        }
        Self::new(entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_tsv(resources::open(path.as_ref())?)
    }

    pub fn bundled() -> Self {
        Self::parse_tsv(resources::SENTIMENT_LEXICON.as_bytes()).expect("bundled sentiment lexicon")
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.scores.get(word).copied()
    }
}

/// Lexicon polarity, or 0 for unknown words.
pub fn word_sentiment(lex: &SentimentLexicon, w: &str) -> f64 {
    lex.get(w).unwrap_or(0.0)
}

/// Mean polarity of `words`; unknown words count as 0 and stay in the
/// denominator.
pub fn set_sentiment<S: AsRef<str>>(lex: &SentimentLexicon, words: &[S]) -> Result<f64> {
    if words.is_empty() {
        return Err(Error::Argument("sentiment of an empty word set".into()));
    }
    let total: f64 = words.iter().map(|w| word_sentiment(lex, w.as_ref())).sum();
    Ok(total / words.len() as f64)
}
