//! Lexicons and word lists compiled into the library.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use crate::error::{Error, Result};

pub const POS_LEXICON: &str = include_str!("../data/pos_lexicon.tsv");
pub const POS_SUFFIXES: &str = include_str!("../data/pos_suffixes.tsv");
pub const SEMANTIC_LEXICON: &str = include_str!("../data/semantic_lexicon.tsv");
pub const SENTIMENT_LEXICON: &str = include_str!("../data/sentiment_lexicon.tsv");
pub const TARGET_SETS: &str = include_str!("../data/target_sets.json");
pub const CONCEPTS: &str = include_str!("../data/concepts.json");

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}
