//! Context-free part-of-speech tagging of vocabulary words.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resources;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PosTag {
    Noun,
    Adjective,
    Verb,
    Other,
}

impl FromStr for PosTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "noun" | "n" | "nn" => Ok(PosTag::Noun),
            "adjective" | "adj" | "a" | "jj" => Ok(PosTag::Adjective),
            "verb" | "v" | "vb" => Ok(PosTag::Verb),
            "other" | "x" => Ok(PosTag::Other),
            other => Err(Error::Argument(format!("unknown POS tag {other:?}"))),
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PosTag::Noun => "noun",
            PosTag::Adjective => "adjective",
            PosTag::Verb => "verb",
            PosTag::Other => "other",
        })
    }
}

/// Set of tags a candidate word must carry. An empty set admits every word.
pub type PosFilter = BTreeSet<PosTag>;

/// Parse a comma-separated tag list such as `"adjective,noun"`.
pub fn parse_pos_filter(spec: &str) -> Result<PosFilter> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(PosTag::from_str)
        .collect()
}

/// Anything that can assign a tag to an isolated word.
pub trait PosTagger: Sync {
    fn tag(&self, word: &str) -> PosTag;
}

/// Unigram lexicon with suffix-rule fallback for unknown words.
#[derive(Clone, Debug, Default)]
pub struct PosLexicon {
    words: HashMap<String, PosTag>,
    suffixes: Vec<(String, PosTag)>,
}

impl PosLexicon {
    /// Suffix rules are reordered longest-first; rules of equal length keep
    /// their relative order.
    pub fn new(
        words: impl IntoIterator<Item = (String, PosTag)>,
        suffixes: impl IntoIterator<Item = (String, PosTag)>,
    ) -> Self {
        let mut map = HashMap::new();
        for (w, t) in words {
            map.entry(w.to_lowercase()).or_insert(t);
        }
        let mut suffixes: Vec<(String, PosTag)> = suffixes.into_iter().collect();
        suffixes.sort_by_key(|(s, _)| std::cmp::Reverse(s.len()));
        PosLexicon {
            words: map,
            suffixes,
        }
    }

    /// Parse `word<TAB>tag` lines (also used for `suffix<TAB>tag`).
    pub fn parse_tsv(input: impl BufRead) -> Result<Vec<(String, PosTag)>> {
        let mut out = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, tag) = line.split_once('\t').ok_or_else(|| Error::Format {
                line: i + 1,
                message: "expected `word<TAB>tag`".into(),
            })?;
            let tag = tag.parse().map_err(|_| Error::Format {
                line: i + 1,
                message: format!("unknown tag {tag:?}"),
            })?;
            out.push((word.trim().to_string(), tag));
        }
        Ok(out)
    }

    pub fn load(lexicon: impl AsRef<Path>, suffixes: Option<&Path>) -> Result<Self> {
        let words = Self::parse_tsv(resources::open(lexicon.as_ref())?)?;
        let rules = match suffixes {
            Some(path) => Self::parse_tsv(resources::open(path)?)?,
            None => Self::parse_tsv(resources::POS_SUFFIXES.as_bytes())?,
        };
        Ok(Self::new(words, rules))
    }

    /// The lexicon and suffix rules shipped with the crate.
    pub fn bundled() -> Self {
        let words = Self::parse_tsv(resources::POS_LEXICON.as_bytes()).expect("bundled POS lexicon");
        let rules = Self::parse_tsv(resources::POS_SUFFIXES.as_bytes()).expect("bundled suffixes");
        Self::new(words, rules)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn suffix_rules(&self) -> &[(String, PosTag)] {
        &self.suffixes
    }

    pub fn lookup(&self, word: &str) -> Option<PosTag> {
        self.words.get(word).copied()
    }
}

impl PosTagger for PosLexicon {
    fn tag(&self, word: &str) -> PosTag {
        pos_tag(self, word)
    }
}

/// Lexicon tag if known, else the first matching suffix rule, else `Other`.
pub fn pos_tag(lexicon: &PosLexicon, word: &str) -> PosTag {
    if let Some(tag) = lexicon.words.get(word) {
        return *tag;
    }
    lexicon
        .suffixes
        .iter()
        .find(|(suffix, _)| word.len() > suffix.len() && word.ends_with(suffix.as_str()))
        .map(|&(_, tag)| tag)
        .unwrap_or(PosTag::Other)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicon_entry_wins() {
        let lex = PosLexicon::new([("happy".to_string(), PosTag::Adjective)], []);
        assert_eq!(pos_tag(&lex, "happy"), PosTag::Adjective);
        assert_eq!(pos_tag(&lex, "unknown"), PosTag::Other);
    }

    #[test]
    fn suffix_rule_applies_to_unknown_words() {
        let lex = PosLexicon::new([], [("able".to_string(), PosTag::Adjective)]);
        assert_eq!(pos_tag(&lex, "fuckable"), PosTag::Adjective);
        // a bare suffix is not a derived word
        assert_eq!(pos_tag(&lex, "able"), PosTag::Other);
    }

    #[test]
    fn longest_suffix_first() {
        let lex = PosLexicon::new(
            [],
            [
                ("al".to_string(), PosTag::Adjective),
                ("ical".to_string(), PosTag::Noun),
            ],
        );
        assert_eq!(lex.suffix_rules()[0].0, "ical");
        assert_eq!(pos_tag(&lex, "musical"), PosTag::Noun);
        assert_eq!(pos_tag(&lex, "formal"), PosTag::Adjective);
    }

    #[test]
    fn bundled_lexicon_agrees_with_its_file() {
        let lex = PosLexicon::bundled();
        let entries = PosLexicon::parse_tsv(resources::POS_LEXICON.as_bytes()).unwrap();
        assert!(entries.len() > 1000);
        for (word, tag) in entries {
            assert_eq!(pos_tag(&lex, &word), tag, "{word}");
        }
        let rules = lex.suffix_rules();
        assert!(rules.windows(2).all(|w| w[0].0.len() >= w[1].0.len()));
    }

    #[test]
    fn parses_filters_and_rejects_unknown_tags() {
        let f = parse_pos_filter("adjective,noun").unwrap();
        assert_eq!(f.into_iter().collect::<Vec<_>>(), [PosTag::Noun, PosTag::Adjective]);
        assert!(parse_pos_filter("").unwrap().is_empty());
        assert!(parse_pos_filter("adverb").is_err());
        assert!(PosLexicon::parse_tsv("good\tadjective\nbad\n".as_bytes()).is_err());
    }
}
