use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resources;

/// Named list of words standing for one pole of a protected attribute.
///
/// Words are lowercased and deduplicated (first occurrence kept) on
/// construction; the list is never empty.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTargetSet")]
pub struct TargetSet {
    name: String,
    words: Vec<String>,
}

#[derive(Deserialize)]
struct RawTargetSet {
    name: String,
    words: Vec<String>,
}

impl TryFrom<RawTargetSet> for TargetSet {
    type Error = Error;

    fn try_from(raw: RawTargetSet) -> Result<Self> {
        TargetSet::new(raw.name, raw.words)
    }
}

impl TargetSet {
    pub fn new<S: AsRef<str>>(name: impl Into<String>, words: impl IntoIterator<Item = S>) -> Result<Self> {
        let name = name.into();
        let mut seen = HashSet::new();
        let words: Vec<String> = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty() && seen.insert(w.clone()))
            .collect();
        if words.is_empty() {
            return Err(Error::Config(format!("target set {name:?} has no words")));
        }
        Ok(TargetSet { name, words })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.iter().any(|w| w == word)
    }

    /// Read a `{"name": ..., "words": [...]}` file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Ok(serde_json::from_reader(resources::open(path)?)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }

    /// A bundled set by name, e.g. `female`, `islam`, `hispanic_names`,
    /// `career`.
    pub fn preset(name: &str) -> Result<Self> {
        bundled_target_sets()
            .into_iter()
            .find(|t| t.name == name)
            .ok_or_else(|| {
                let known: Vec<String> = bundled_target_sets().into_iter().map(|t| t.name).collect();
                Error::Config(format!("no bundled target set {name:?}; known sets: {}", known.join(", ")))
            })
    }

    /// Treat `spec` as a file path if it exists, otherwise as a preset name.
    pub fn resolve(spec: &str) -> Result<Self> {
        if Path::new(spec).exists() {
            Self::load(spec)
        } else {
            Self::preset(spec)
        }
    }
}

pub fn bundled_target_sets() -> Vec<TargetSet> {
    serde_json::from_str(resources::TARGET_SETS).expect("bundled target sets are valid")
}
