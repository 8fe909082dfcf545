//! Comment-dump ingestion, text normalisation and comment-level subsampling.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use flate2::read::MultiGzDecoder;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// One token sequence produced by [`preprocess`].
pub type Sentence = Vec<String>;

/// Percentage of malformed lines above which an ingest fails.
const MALFORMED_LIMIT_PERCENT: usize = 10;

/// A single comment as found in a dump.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommentRecord {
    pub id: String,
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subreddit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_utc: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author: Option<String>,
}

impl CommentRecord {
    pub fn new(id: impl Into<String>, body: impl Into<String>) -> Self {
        CommentRecord {
            id: id.into(),
            body: body.into(),
            subreddit: None,
            created_utc: None,
            author: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    Jsonl,
    JsonlGzip,
    PlainText,
}

impl InputFormat {
    /// Guess the format from a file name: `.gz` is gzip-compressed JSONL,
    /// `.txt` is plain text, everything else JSONL.
    pub fn from_path(path: &Path) -> InputFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("gz") => InputFormat::JsonlGzip,
            Some("txt") => InputFormat::PlainText,
            _ => InputFormat::Jsonl,
        }
    }
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" | "ndjson" => Ok(InputFormat::Jsonl),
            "jsonl-gzip" | "jsonl.gz" | "gzip" => Ok(InputFormat::JsonlGzip),
            "plain-text" | "text" | "txt" => Ok(InputFormat::PlainText),
            other => Err(Error::Argument(format!("unknown corpus format {other:?}"))),
        }
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputFormat::Jsonl => "jsonl",
            InputFormat::JsonlGzip => "jsonl-gzip",
            InputFormat::PlainText => "plain-text",
        })
    }
}

/// Counters accumulated while reading a dump.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    /// Non-blank input lines seen.
    pub lines: usize,
    pub records: usize,
    pub malformed: usize,
    pub missing_body: usize,
}

/// Streaming reader over a comment dump.
///
/// Yields records in file order. Malformed JSON lines and records without a
/// string `body` are skipped and counted; once the input is exhausted a final
/// error is yielded if more than 10% of the lines were malformed.
pub struct CommentReader {
    path: PathBuf,
    format: InputFormat,
    lines: std::io::Lines<Box<dyn BufRead + Send>>,
    line_no: usize,
    stats: IngestStats,
    finished: bool,
}

impl CommentReader {
    pub fn stats(&self) -> IngestStats {
        self.stats
    }

    fn parse_json_line(&mut self, line: &str) -> Option<CommentRecord> {
        let value: Value = match serde_json::from_str(line) {
            Ok(Value::Object(map)) => Value::Object(map),
            _ => {
                self.stats.malformed += 1;
                log::debug!("{}:{}: malformed JSON line", self.path.display(), self.line_no);
                return None;
            }
        };
        let body = match value.get("body") {
            Some(Value::String(body)) => body.clone(),
            _ => {
                self.stats.missing_body += 1;
                return None;
            }
        };
        let id = match value.get("id") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => format!("line-{}", self.line_no),
        };
        let created_utc = match value.get("created_utc") {
            Some(Value::Number(n)) => n.as_i64().or_else(|| n.as_f64().map(|f| f as i64)),
            Some(Value::String(s)) => s.parse().ok(),
            _ => None,
        };
        let string_field = |key: &str| value.get(key).and_then(Value::as_str).map(str::to_string);
        Some(CommentRecord {
            id,
            body,
            subreddit: string_field("subreddit"),
            created_utc,
            author: string_field("author"),
        })
    }
}

impl Iterator for CommentReader {
    type Item = Result<CommentRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.finished {
            return None;
        }
        loop {
            let line = match self.lines.next() {
                Some(Ok(line)) => line,
                Some(Err(e)) => {
                    self.finished = true;
                    return Some(Err(Error::io(&self.path, e)));
                }
                None => {
                    self.finished = true;
                    let s = self.stats;
                    if s.malformed * 100 > s.lines * MALFORMED_LIMIT_PERCENT {
                        return Some(Err(Error::TooManyMalformed {
                            path: self.path.clone(),
                            malformed: s.malformed,
                            total: s.lines,
                        }));
                    }
                    if s.malformed + s.missing_body > 0 {
                        log::warn!(
                            "{}: skipped {} malformed and {} body-less records",
                            self.path.display(),
                            s.malformed,
                            s.missing_body
                        );
                    }
                    return None;
                }
            };
            self.line_no += 1;
            let record = match self.format {
                InputFormat::PlainText => {
                    self.stats.lines += 1;
                    Some(CommentRecord::new(format!("line-{}", self.line_no), line))
                }
                InputFormat::Jsonl | InputFormat::JsonlGzip => {
                    if line.trim().is_empty() {
                        continue;
                    }
                    self.stats.lines += 1;
                    self.parse_json_line(&line)
                }
            };
            if let Some(record) = record {
                self.stats.records += 1;
                return Some(Ok(record));
            }
        }
    }
}

/// Open a comment dump for streaming.
pub fn ingest(path: impl AsRef<Path>, format: InputFormat) -> Result<CommentReader> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader: Box<dyn BufRead + Send> = match format {
        InputFormat::JsonlGzip => Box::new(BufReader::new(MultiGzDecoder::new(file))),
        InputFormat::Jsonl | InputFormat::PlainText => Box::new(BufReader::new(file)),
    };
    Ok(CommentReader {
        path: path.to_path_buf(),
        format,
        lines: reader.lines(),
        line_no: 0,
        stats: IngestStats::default(),
        finished: false,
    })
}

/// Read a whole dump into memory.
pub fn read_comments(
    path: impl AsRef<Path>,
    format: InputFormat,
) -> Result<(Vec<CommentRecord>, IngestStats)> {
    let mut reader = ingest(path, format)?;
    let records = reader.by_ref().collect::<Result<Vec<_>>>()?;
    Ok((records, reader.stats()))
}

fn keep_char(c: char) -> bool {
    c.is_ascii_lowercase() || c.is_ascii_digit() || c == '\''
}

/// Normalise raw text into lowercase token sentences.
///
/// Sentences end at `.`, `!`, `?` or a newline. Within a sentence every
/// character outside `[a-z0-9']` becomes a space and tokens are the
/// whitespace-separated pieces. Empty sentences are dropped.
pub fn tokenize(text: &str) -> Vec<Sentence> {
    let lower = text.to_lowercase();
    lower
        .split(['.', '!', '?', '\n'])
        .filter_map(|raw| {
            let cleaned: String = raw
                .chars()
                .map(|c| if keep_char(c) { c } else { ' ' })
                .collect();
            let tokens: Sentence = cleaned.split_whitespace().map(str::to_string).collect();
            (!tokens.is_empty()).then_some(tokens)
        })
        .collect()
}

pub fn preprocess(record: &CommentRecord) -> Vec<Sentence> {
    tokenize(&record.body)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub comments: usize,
    pub tokens: usize,
    pub unique_tokens: usize,
}

/// Preprocessed corpus, grouped by comment so that subsampling can work on
/// whole comments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenizedCorpus {
    comments: Vec<Vec<Sentence>>,
    stats: CorpusStats,
}

impl TokenizedCorpus {
    pub fn from_comments(comments: Vec<Vec<Sentence>>) -> Self {
        let mut unique = HashSet::new();
        let mut tokens = 0;
        for token in comments.iter().flatten().flatten() {
            tokens += 1;
            if !unique.contains(token.as_str()) {
                unique.insert(token.clone());
            }
        }
        let stats = CorpusStats {
            comments: comments.len(),
            tokens,
            unique_tokens: unique.len(),
        };
        TokenizedCorpus { comments, stats }
    }

    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a CommentRecord>) -> Self {
        Self::from_comments(records.into_iter().map(preprocess).collect())
    }

    /// Ingest and preprocess a dump in one pass.
    pub fn load(path: impl AsRef<Path>, format: InputFormat) -> Result<Self> {
        let mut comments = Vec::new();
        for record in ingest(path, format)? {
            comments.push(preprocess(&record?));
        }
        Ok(Self::from_comments(comments))
    }

    /// Build directly from text, one comment per item.
    pub fn from_texts<S: AsRef<str>>(texts: impl IntoIterator<Item = S>) -> Self {
        Self::from_comments(texts.into_iter().map(|t| tokenize(t.as_ref())).collect())
    }

    pub fn comments(&self) -> &[Vec<Sentence>] {
        &self.comments
    }

    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> + '_ {
        self.comments.iter().flatten()
    }

    pub fn stats(&self) -> CorpusStats {
        self.stats
    }

    pub fn len(&self) -> usize {
        self.comments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comments.is_empty()
    }

    /// Sample `floor(fraction * N)` comments uniformly without replacement.
    ///
    /// The sample keeps the original comment order and is reproducible for
    /// a given seed.
    pub fn bootstrap_sample(&self, fraction: f64, seed: u64) -> Result<TokenizedCorpus> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::Argument(format!(
                "sampling fraction must lie in (0, 1], got {fraction}"
            )));
        }
        if self.is_empty() {
            return Err(Error::Argument("cannot sample an empty corpus".into()));
        }
        let n = self.comments.len();
        let amount = ((fraction * n as f64).floor() as usize).min(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = rand::seq::index::sample(&mut rng, n, amount).into_vec();
        picked.sort_unstable();
        Ok(Self::from_comments(
            picked.into_iter().map(|i| self.comments[i].clone()).collect(),
        ))
    }
}

pub fn bootstrap_sample(
    corpus: &TokenizedCorpus,
    fraction: f64,
    seed: u64,
) -> Result<TokenizedCorpus> {
    corpus.bootstrap_sample(fraction, seed)
}

/// Write records as JSON lines.
pub fn write_jsonl<'a>(
    mut out: impl std::io::Write,
    records: impl IntoIterator<Item = &'a CommentRecord>,
) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn s(tokens: &[&str]) -> Sentence {
        tokens.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn splits_sentences_and_strips_punctuation() {
        assert_eq!(
            tokenize("Hello, World! Bye."),
            vec![s(&["hello", "world"]), s(&["bye"])]
        );
    }

    #[test]
    fn keeps_apostrophes() {
        assert_eq!(tokenize("don't STOP"), vec![s(&["don't", "stop"])]);
    }

    #[test]
    fn empty_body_gives_no_sentences() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("?!...\n\n").is_empty());
    }

    #[test]
    fn newline_ends_sentence() {
        assert_eq!(tokenize("one\ntwo"), vec![s(&["one"]), s(&["two"])]);
    }

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn ingests_valid_lines() {
        let f = write_tmp(
            "{\"id\":\"a\",\"body\":\"x\"}\n{\"id\":\"b\",\"body\":\"y\"}\n{\"id\":\"c\",\"body\":\"z\"}\n",
        );
        let (records, stats) = read_comments(f.path(), InputFormat::Jsonl).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(stats.malformed, 0);
        assert_eq!(records[1].id, "b");
    }

    #[test]
    fn skips_malformed_line_below_limit() {
        let mut content = String::new();
        for i in 0..19 {
            content.push_str(&format!("{{\"id\":\"{i}\",\"body\":\"ok\"}}\n"));
        }
        content.push_str("{not json\n");
        let f = write_tmp(&content);
        let (records, stats) = read_comments(f.path(), InputFormat::Jsonl).unwrap();
        assert_eq!(records.len(), 19);
        assert_eq!(stats.malformed, 1);
    }

    #[test]
    fn two_valid_one_malformed_is_too_many() {
        // one bad line out of three is 33%, above the tolerance
        let f = write_tmp("{\"body\":\"a\"}\n{\"body\":\"b\"}\nnope\n");
        let mut reader = ingest(f.path(), InputFormat::Jsonl).unwrap();
        let items: Vec<_> = reader.by_ref().collect();
        assert_eq!(items.iter().filter(|r| r.is_ok()).count(), 2);
        assert_eq!(reader.stats().malformed, 1);
        assert!(matches!(items.last(), Some(Err(Error::TooManyMalformed { .. }))));
    }

    #[test]
    fn missing_body_is_skipped_not_fatal() {
        let f = write_tmp("{\"id\":1,\"body\":null}\n{\"id\":2}\n{\"id\":3,\"body\":\"hi\"}\n");
        let (records, stats) = read_comments(f.path(), InputFormat::Jsonl).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].id, "3");
        assert_eq!(stats.missing_body, 2);
    }

    #[test]
    fn unreadable_file_is_fatal() {
        let err = ingest("/definitely/not/here.jsonl", InputFormat::Jsonl).err();
        assert!(matches!(err, Some(Error::Io { .. })));
    }

    #[test]
    fn reads_gzip_and_plain_text() {
        use flate2::write::GzEncoder;
        let mut enc = GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(b"{\"body\":\"first\"}\n{\"body\":\"second\"}\n").unwrap();
        let gz = enc.finish().unwrap();
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(&gz).unwrap();
        let (records, _) = read_comments(f.path(), InputFormat::JsonlGzip).unwrap();
        assert_eq!(records.len(), 2);

        let f = write_tmp("line one\nline two\n");
        let (records, _) = read_comments(f.path(), InputFormat::PlainText).unwrap();
        assert_eq!(records[1].body, "line two");
    }

    #[test]
    fn sample_full_fraction_is_identity() {
        let corpus = TokenizedCorpus::from_texts((0..50).map(|i| format!("word{i} x")));
        let sample = corpus.bootstrap_sample(1.0, 3).unwrap();
        assert_eq!(sample, corpus);
    }

    #[test]
    fn sample_half_is_distinct_subset() {
        let corpus = TokenizedCorpus::from_texts((0..2000).map(|i| format!("c{i}")));
        let sample = corpus.bootstrap_sample(0.5, 11).unwrap();
        assert_eq!(sample.len(), 1000);
        let original: HashSet<_> = corpus.comments().iter().collect();
        let picked: HashSet<_> = sample.comments().iter().collect();
        assert_eq!(picked.len(), 1000);
        assert!(picked.is_subset(&original));
    }

    #[test]
    fn sample_is_seed_reproducible() {
        let corpus = TokenizedCorpus::from_texts((0..200).map(|i| format!("c{i}")));
        let a = corpus.bootstrap_sample(0.5, 7).unwrap();
        assert_eq!(a, corpus.bootstrap_sample(0.5, 7).unwrap());
        let differing = (100..120)
            .filter(|&seed| corpus.bootstrap_sample(0.5, seed).unwrap() != a)
            .count();
        assert_eq!(differing, 20);
    }

    #[test]
    fn sample_rejects_bad_fraction() {
        let corpus = TokenizedCorpus::from_texts(["a b"]);
        for f in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                corpus.bootstrap_sample(f, 0),
                Err(Error::Argument(_))
            ));
        }
    }

    proptest! {
        #[test]
        fn tokens_use_restricted_alphabet(text in "\\PC{0,80}") {
            for token in tokenize(&text).iter().flatten() {
                prop_assert!(!token.is_empty());
                prop_assert!(token.chars().all(keep_char));
            }
        }

        #[test]
        fn tokenize_is_idempotent_on_rendered_output(text in "\\PC{0,80}") {
            let once = tokenize(&text);
            let rendered = once.iter().map(|s| s.join(" ")).collect::<Vec<_>>().join(". ");
            prop_assert_eq!(tokenize(&rendered), once);
        }

        #[test]
        fn sample_size_is_floor(n in 1usize..300, fraction in 0.01f64..=1.0, seed in any::<u64>()) {
            let corpus = TokenizedCorpus::from_texts((0..n).map(|i| format!("c{i}")));
            let sample = corpus.bootstrap_sample(fraction, seed).unwrap();
            prop_assert_eq!(sample.len(), (fraction * n as f64).floor() as usize);
        }
    }
}
