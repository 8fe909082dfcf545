//! Synthetic comment corpora with a known, planted bias.
//!
//! Every sentence pairs one adjective with gender-marked context:
//!
//! ```text
//! she g31x0 pretty g31x2 f7
//! ```
//!
//! i.e. a target word, a token from the pool of a small group of adjectives
//! from the same semantic category, the adjective, a second group token and
//! a gender context token. Adjectives from the planted categories pick
//! the favored gender with probability `planted_share`; all others are
//! balanced.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bias::{pos_tag, PosLexicon, PosTag, TargetSet};
use crate::corpus::CommentRecord;
use crate::error::{Error, Result};
use crate::label::SemanticLexicon;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    /// Stop once the comment bodies reach this many bytes.
    pub target_bytes: usize,
    pub planted_female: Option<String>,
    pub planted_male: Option<String>,
    pub planted_share: f64,
    pub sentences_per_comment: usize,
    pub group_size: usize,
    /// Context tokens per adjective group.
    pub group_tokens: usize,
    /// Gender context tokens per side.
    pub context_tokens: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            target_bytes: 2_000_000,
            planted_female: Some(PLANTED_FEMALE.into()),
            planted_male: Some(PLANTED_MALE.into()),
            planted_share: 0.9,
            sentences_per_comment: 3,
            group_size: 5,
            group_tokens: 3,
            context_tokens: 20,
            seed: 1,
        }
    }
}

pub const PLANTED_FEMALE: &str = "Judgement of appearance (pretty etc.)";
pub const PLANTED_MALE: &str = "Power, organizing";

#[derive(Clone, Debug)]
pub struct PlantedCorpus {
    pub records: Vec<CommentRecord>,
    /// Adjectives used, keyed by their first semantic label.
    pub categories: BTreeMap<String, Vec<String>>,
}

impl PlantedCorpus {
    pub fn bytes(&self) -> usize {
        self.records.iter().map(|r| r.body.len()).sum()
    }
}

/// Adjectives of `sem`, grouped by first label, in lexicographic order.
pub fn adjective_categories(pos: &PosLexicon, sem: &SemanticLexicon) -> BTreeMap<String, Vec<String>> {
    let mut words: Vec<&str> = sem.words().collect();
    words.sort_unstable();
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for word in words {
        if pos_tag(pos, word) != PosTag::Adjective {
            continue;
        }
        if let Some(first) = sem.labels(word).first() {
            out.entry(first.clone()).or_default().push(word.to_string());
        }
    }
    out
}

/// Generate a corpus per `cfg` using the female/male target sets.
pub fn generate_planted_corpus(cfg: &SyntheticConfig, pos: &PosLexicon, sem: &SemanticLexicon) -> Result<PlantedCorpus> {
    if !(0.0..=1.0).contains(&cfg.planted_share) {
        return Err(Error::Argument(format!("planted_share {} is outside [0, 1]", cfg.planted_share)));
    }
    if cfg.group_size == 0 || cfg.group_tokens == 0 || cfg.context_tokens == 0 || cfg.sentences_per_comment == 0 {
        return Err(Error::Argument("group sizes, token pools and sentences_per_comment must be positive".into()));
    }
    let categories = adjective_categories(pos, sem);
    for planted in [&cfg.planted_female, &cfg.planted_male].into_iter().flatten() {
        if !categories.contains_key(planted) {
            return Err(Error::Config(format!("no adjectives carry the planted label {planted:?}")));
        }
    }
    let female = TargetSet::preset("female")?;
    let male = TargetSet::preset("male")?;

    // (adjective, group token, probability of a female context)
    let mut entries: Vec<(String, String, f64)> = Vec::new();
    let mut group = 0usize;
    for (label, words) in &categories {
        let p_female = if cfg.planted_female.as_deref() == Some(label) {
            cfg.planted_share
        } else if cfg.planted_male.as_deref() == Some(label) {
            1.0 - cfg.planted_share
        } else {
            0.5
        };
        for chunk in words.chunks(cfg.group_size) {
            for word in chunk {
                entries.push((word.clone(), format!("g{group}"), p_female));
            }
            group += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut records = Vec::new();
    let mut bytes = 0usize;
    while bytes < cfg.target_bytes {
        let mut sentences = Vec::with_capacity(cfg.sentences_per_comment);
        for _ in 0..cfg.sentences_per_comment {
            let (adj, grp, p) = &entries[rng.gen_range(0..entries.len())];
            let is_female = rng.gen_bool(*p);
            let (targets, marker) = if is_female { (&female, 'f') } else { (&male, 'm') };
            let target = targets.words().choose(&mut rng).expect("non-empty target set");
            let g1 = rng.gen_range(0..cfg.group_tokens);
            let g2 = rng.gen_range(0..cfg.group_tokens);
            let c = rng.gen_range(0..cfg.context_tokens);
            sentences.push(format!("{target} {grp}x{g1} {adj} {grp}x{g2} {marker}{c}"));
        }
        let body = sentences.join(". ") + ".";
        bytes += body.len();
        records.push(CommentRecord::new(format!("c{}", records.len()), body));
    }
    Ok(PlantedCorpus { records, categories })
}
