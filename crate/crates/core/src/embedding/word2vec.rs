//! Reader and writer for the word2vec text and binary formats.
//!
//! Both formats start with a `count dim` header line. The text format then
//! has one `word v1 ... vd` line per word; the binary format stores the word,
//! a space and `dim` little-endian IEEE-754 single-precision floats, each
//! record followed by a newline.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{EmbeddingModel, Vocabulary};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelFormat {
    Word2vecText,
    Word2vecBinary,
}

impl ModelFormat {
    /// `.txt`/`.vec` files are text, everything else binary.
    pub fn from_path(path: &Path) -> ModelFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("txt") | Some("vec") => ModelFormat::Word2vecText,
            _ => ModelFormat::Word2vecBinary,
        }
    }
}

impl FromStr for ModelFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word2vec-text" | "text" | "txt" => Ok(ModelFormat::Word2vecText),
            "word2vec-binary" | "binary" | "bin" => Ok(ModelFormat::Word2vecBinary),
            other => Err(Error::Argument(format!("unknown model format {other:?}"))),
        }
    }
}

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: message.into(),
    }
}

fn parse_header(line: &str) -> Result<(usize, usize)> {
    let mut parts = line.split_whitespace();
    let parsed = (
        parts.next().and_then(|s| s.parse::<usize>().ok()),
        parts.next().and_then(|s| s.parse::<usize>().ok()),
        parts.next(),
    );
    match parsed {
        (Some(count), Some(dim), None) if dim > 0 => Ok((count, dim)),
        _ => Err(format_err(1, format!("bad header {line:?}, expected `count dim`"))),
    }
}

/// Collects rows, dropping repeated words (first occurrence wins).
struct RowSink {
    words: Vec<String>,
    seen: std::collections::HashSet<String>,
    matrix: Vec<f64>,
    duplicates: usize,
}

impl RowSink {
    fn new(count: usize, dim: usize) -> Self {
        RowSink {
            words: Vec::with_capacity(count),
            seen: Default::default(),
            matrix: Vec::with_capacity(count.saturating_mul(dim).min(1 << 28)),
            duplicates: 0,
        }
    }

    fn push(&mut self, word: String, values: impl Iterator<Item = f64>) {
        if self.seen.contains(&word) {
            self.duplicates += 1;
            log::warn!("duplicate word {word:?} in embedding file; keeping the first vector");
            return;
        }
        self.seen.insert(word.clone());
        self.words.push(word);
        self.matrix.extend(values);
    }

    fn finish(self, dim: usize) -> Result<EmbeddingModel> {
        EmbeddingModel::new(Vocabulary::from_words(self.words), dim, self.matrix)
    }
}

pub fn read_word2vec_text(input: impl BufRead) -> Result<EmbeddingModel> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| format_err(1, "empty file"))??;
    let (count, dim) = parse_header(&header)?;
    let mut sink = RowSink::new(count, dim);
    let mut rows = 0;
    let mut values = Vec::with_capacity(dim);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if rows == count {
            return Err(format_err(line_no, format!("more than {count} rows")));
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().expect("non-blank line has a token").to_string();
        values.clear();
        for part in parts {
            let v: f64 = part
                .parse()
                .map_err(|_| format_err(line_no, format!("bad number {part:?}")))?;
            values.push(v);
        }
        if values.len() != dim {
            return Err(format_err(
                line_no,
                format!("{} values for {word:?}, header says {dim}", values.len()),
            ));
        }
        sink.push(word, values.iter().copied());
        rows += 1;
    }
    if rows != count {
        return Err(format_err(
            rows + 2,
            format!("file has {rows} rows, header says {count}"),
        ));
    }
    sink.finish(dim)
}

pub fn read_word2vec_binary(mut input: impl BufRead) -> Result<EmbeddingModel> {
    let mut header = String::new();
    input.read_line(&mut header)?;
    let (count, dim) = parse_header(header.trim_end())?;
    let mut sink = RowSink::new(count, dim);
    let mut buf = vec![0u8; dim * 4];
    let mut word = Vec::new();
    for row in 0..count {
        let line_no = row + 2;
        word.clear();
        input.read_until(b' ', &mut word)?;
        if word.last() != Some(&b' ') {
            return Err(format_err(
                line_no,
                format!("file ends after {row} records, header says {count}"),
            ));
        }
        word.pop();
        let start = word.iter().position(|b| !b.is_ascii_whitespace()).unwrap_or(word.len());
        let text = std::str::from_utf8(&word[start..])
            .map_err(|_| format_err(line_no, "word is not valid UTF-8"))?;
        if text.is_empty() {
            return Err(format_err(line_no, "empty word"));
        }
        input
            .read_exact(&mut buf)
            .map_err(|_| format_err(line_no, format!("truncated vector for {text:?}")))?;
        let values = buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64);
        sink.push(text.to_string(), values);
    }
    sink.finish(dim)
}

pub fn write_word2vec_text(model: &EmbeddingModel, mut out: impl Write) -> Result<()> {
    writeln!(out, "{} {}", model.len(), model.dim())?;
    for (i, word) in model.vocab().words().iter().enumerate() {
        out.write_all(word.as_bytes())?;
        for v in model.row(i) {
            write!(out, " {v}")?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Values are narrowed to `f32`.
pub fn write_word2vec_binary(model: &EmbeddingModel, mut out: impl Write) -> Result<()> {
    writeln!(out, "{} {}", model.len(), model.dim())?;
    for (i, word) in model.vocab().words().iter().enumerate() {
        out.write_all(word.as_bytes())?;
        out.write_all(b" ")?;
        for &v in model.row(i) {
            out.write_all(&(v as f32).to_le_bytes())?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn load_embeddings(path: impl AsRef<Path>, format: ModelFormat) -> Result<EmbeddingModel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    match format {
        ModelFormat::Word2vecText => read_word2vec_text(reader),
        ModelFormat::Word2vecBinary => read_word2vec_binary(reader),
    }
}

pub fn save_embeddings(
    model: &EmbeddingModel,
    path: impl AsRef<Path>,
    format: ModelFormat,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        ModelFormat::Word2vecText => write_word2vec_text(model, &mut out)?,
        ModelFormat::Word2vecBinary => write_word2vec_binary(model, &mut out)?,
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::cosine;
    use proptest::prelude::*;

    #[test]
    fn reads_small_text_model() {
        let model = read_word2vec_text("2 3\na 1 0 0\nb 0 1 0\n".as_bytes()).unwrap();
        assert_eq!(model.len(), 2);
        assert_eq!(model.dim(), 3);
        let c = cosine(model.vector("a").unwrap(), model.vector("b").unwrap()).unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn text_row_mismatch_reports_line() {
        match read_word2vec_text("2 3\na 1 0 0\nb 0 1\n".as_bytes()) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match read_word2vec_text("3 2\na 1 0\nb 0 1\n".as_bytes()) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(read_word2vec_text("x y\n".as_bytes()).is_err());
    }

    #[test]
    fn duplicate_word_keeps_first() {
        let model = read_word2vec_text("3 1\na 1\nb 2\na 3\n".as_bytes()).unwrap();
        assert_eq!(model.len(), 2);
        assert_eq!(model.vector("a").unwrap(), [1.0]);
    }

    #[test]
    fn binary_truncation_is_a_format_error() {
        let model = EmbeddingModel::from_vectors([("a", [1.0, 2.0]), ("b", [3.0, 4.0])]).unwrap();
        let mut buf = Vec::new();
        write_word2vec_binary(&model, &mut buf).unwrap();
        buf.truncate(buf.len() - 6);
        assert!(matches!(
            read_word2vec_binary(buf.as_slice()),
            Err(Error::Format { line: 3, .. })
        ));
    }

    #[test]
    fn binary_layout_is_little_endian_f32() {
        let model = EmbeddingModel::from_vectors([("w", [1.0, -2.5])]).unwrap();
        let mut buf = Vec::new();
        write_word2vec_binary(&model, &mut buf).unwrap();
        let mut expected = b"1 2\nw ".to_vec();
        expected.extend_from_slice(&1.0f32.to_le_bytes());
        expected.extend_from_slice(&(-2.5f32).to_le_bytes());
        expected.push(b'\n');
        assert_eq!(buf, expected);
    }

    fn model_strategy() -> impl Strategy<Value = EmbeddingModel> {
        (1usize..6, 1usize..8).prop_flat_map(|(n, d)| {
            prop::collection::vec(prop::collection::vec(-5.0f32..5.0, d), n).prop_map(|rows| {
                EmbeddingModel::from_vectors(
                    rows.into_iter()
                        .enumerate()
                        .map(|(i, r)| (format!("w{i}"), r.into_iter().map(f64::from).collect::<Vec<_>>())),
                )
                .unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn text_and_binary_round_trip(model in model_strategy()) {
            let mut text = Vec::new();
            write_word2vec_text(&model, &mut text).unwrap();
            prop_assert_eq!(&read_word2vec_text(text.as_slice()).unwrap(), &model);

            let mut bin = Vec::new();
            write_word2vec_binary(&model, &mut bin).unwrap();
            prop_assert_eq!(&read_word2vec_binary(bin.as_slice()).unwrap(), &model);
        }
    }
}
