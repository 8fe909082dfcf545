//! Semantic labeling of clusters and label rank tables.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cluster::{nearest_among, ClusterPartition};
use crate::error::{Error, Result};
use crate::resources;
use crate::sentiment::{set_sentiment, SentimentLexicon};

/// Word → ordered category labels, most likely first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SemanticLexicon {
    words: HashMap<String, Vec<String>>,
    inventory: BTreeSet<String>,
}

impl SemanticLexicon {
    /// The inventory is the set of labels used by the entries.
    pub fn new(entries: impl IntoIterator<Item = (String, Vec<String>)>) -> Self {
        let mut words = HashMap::new();
        let mut inventory = BTreeSet::new();
        for (word, labels) in entries {
            let mut labels: Vec<String> = labels
                .into_iter()
                .map(|l| l.trim().to_string())
                .filter(|l| !l.is_empty())
                .collect();
            let mut seen = HashSet::new();
            labels.retain(|l| seen.insert(l.clone()));
            if labels.is_empty() {
                continue;
            }
            inventory.extend(labels.iter().cloned());
            words.entry(word.trim().to_lowercase()).or_insert(labels);
        }
        SemanticLexicon { words, inventory }
    }

    /// Parse `word<TAB>label1|label2|...` lines.
    pub fn parse_tsv(input: impl BufRead) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, labels) = line.split_once('\t').ok_or_else(|| Error::Format {
                line: i + 1,
                message: "expected `word<TAB>label1|label2|...`".into(),
            })?;
            entries.push((word.to_string(), labels.split('|').map(str::to_string).collect()));
        }
        Ok(Self::new(entries))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_tsv(resources::open(path.as_ref())?)
    }

    pub fn bundled() -> Self {
        Self::parse_tsv(resources::SEMANTIC_LEXICON.as_bytes()).expect("bundled semantic lexicon")
    }

    /// Labels of `word` (case-insensitive); empty if unknown.
    pub fn labels(&self, word: &str) -> &[String] {
        let found = match self.words.get(word) {
            Some(l) => Some(l),
            None => self.words.get(&word.to_lowercase()),
        };
        found.map(Vec::as_slice).unwrap_or(&[])
    }

    /// Lexicon words in arbitrary order.
    pub fn words(&self) -> impl Iterator<Item = &str> + '_ {
        self.words.keys().map(String::as_str)
    }

    pub fn inventory(&self) -> &BTreeSet<String> {
        &self.inventory
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelMode {
    /// Only each word's most likely label counts.
    #[default]
    FirstLabel,
    AllLabels,
}

impl FromStr for LabelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first-label" | "first" => Ok(LabelMode::FirstLabel),
            "all-labels" | "all" => Ok(LabelMode::AllLabels),
            other => Err(Error::Argument(format!("unknown label mode {other:?}"))),
        }
    }
}

/// Label multiset of a cluster. Unknown words contribute nothing.
pub fn tag_cluster<S: AsRef<str>>(lex: &SemanticLexicon, cluster: &[S], mode: LabelMode) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for word in cluster {
        let labels = lex.labels(word.as_ref());
        let used = match mode {
            LabelMode::FirstLabel => &labels[..labels.len().min(1)],
            LabelMode::AllLabels => labels,
        };
        for label in used {
            *counts.entry(label.clone()).or_insert(0) += 1;
        }
    }
    counts
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Direct,
    Propagated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledCluster {
    pub words: Vec<String>,
    pub labels: Vec<String>,
    pub label_source: LabelSource,
    /// Cluster the labels were copied from, for propagated clusters.
    pub donor: Option<usize>,
    pub tag_counts: BTreeMap<String, usize>,
    pub sentiment: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledPartition {
    pub clusters: Vec<LabeledCluster>,
    pub r: f64,
    pub k: usize,
    pub seed: u64,
    pub mode: LabelMode,
}

impl LabeledPartition {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }
}

/// Label every cluster with its most frequent tag(s), then copy labels onto
/// untaggable clusters from the nearest directly labeled cluster.
pub fn label_clusters(
    partition: &ClusterPartition,
    lex: &SemanticLexicon,
    sentiment: &SentimentLexicon,
    mode: LabelMode,
) -> Result<LabeledPartition> {
    let mut clusters = Vec::with_capacity(partition.len());
    for words in &partition.clusters {
        let tag_counts = tag_cluster(lex, words, mode);
        let top = tag_counts.values().copied().max().unwrap_or(0);
        let labels: Vec<String> = tag_counts
            .iter()
            .filter(|&(_, &c)| c == top)
            .map(|(l, _)| l.clone())
            .collect();
        clusters.push(LabeledCluster {
            words: words.clone(),
            labels,
            label_source: LabelSource::Direct,
            donor: None,
            tag_counts,
            sentiment: set_sentiment(sentiment, words)?,
        });
    }
    let direct: Vec<bool> = clusters.iter().map(|c| !c.labels.is_empty()).collect();
    if !direct.contains(&true) {
        return Err(Error::Labeling(format!(
            "none of the {} clusters contains a word known to the semantic lexicon",
            clusters.len()
        )));
    }
    let mut pending: Vec<usize> = (0..clusters.len()).filter(|&i| !direct[i]).collect();
    pending.sort_by_key(|&i| (std::cmp::Reverse(clusters[i].words.len()), i));
    for i in pending {
        let donor = nearest_among(partition, i, |j| direct[j])?
            .expect("at least one directly labeled cluster exists");
        clusters[i].labels = clusters[donor].labels.clone();
        clusters[i].label_source = LabelSource::Propagated;
        clusters[i].donor = Some(donor);
    }
    Ok(LabeledPartition {
        clusters,
        r: partition.r,
        k: partition.k,
        seed: partition.seed,
        mode,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelRank {
    pub label: String,
    pub rank: usize,
    pub clusters: usize,
    pub words: usize,
    /// Mean of the per-cluster sentiments over clusters with this label.
    pub sentiment: f64,
    /// Same, weighted by cluster size.
    pub word_sentiment: f64,
}

/// More clusters first, then more words, then lexicographic.
pub fn label_order(a: &LabelRank, b: &LabelRank) -> Ordering {
    b.clusters
        .cmp(&a.clusters)
        .then_with(|| b.words.cmp(&a.words))
        .then_with(|| a.label.cmp(&b.label))
}

pub fn rank_labels(labeled: &LabeledPartition) -> Vec<LabelRank> {
    let mut acc: BTreeMap<&str, (usize, usize, f64, f64)> = BTreeMap::new();
    for c in &labeled.clusters {
        for label in &c.labels {
            let e = acc.entry(label).or_default();
            e.0 += 1;
            e.1 += c.words.len();
            e.2 += c.sentiment;
            e.3 += c.sentiment * c.words.len() as f64;
        }
    }
    let mut ranks: Vec<LabelRank> = acc
        .into_iter()
        .map(|(label, (clusters, words, s, ws))| LabelRank {
            label: label.to_string(),
            rank: 0,
            clusters,
            words,
            sentiment: s / clusters as f64,
            word_sentiment: if words > 0 { ws / words as f64 } else { 0.0 },
        })
        .collect();
    ranks.sort_by(label_order);
    for (i, r) in ranks.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    ranks
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelRow {
    pub label: String,
    pub rank1: Option<usize>,
    pub rank2: Option<usize>,
    /// Cluster-mean sentiment on the side where the label ranks higher.
    pub sent_w: f64,
    pub sentiment1: Option<f64>,
    pub sentiment2: Option<f64>,
    pub word_sentiment1: Option<f64>,
    pub word_sentiment2: Option<f64>,
    pub clusters1: usize,
    pub clusters2: usize,
    pub words1: usize,
    pub words2: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelRankTable {
    pub target1: String,
    pub target2: String,
    pub rows: Vec<LabelRow>,
}

fn dash<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

impl LabelRankTable {
    pub fn row(&self, label: &str) -> Option<&LabelRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Labels of one side (1 or 2) in rank order.
    pub fn side(&self, side: u8) -> Vec<&str> {
        let mut ranked: Vec<(usize, &str)> = self
            .rows
            .iter()
            .filter_map(|r| if side == 1 { r.rank1 } else { r.rank2 }.map(|k| (k, r.label.as_str())))
            .collect();
        ranked.sort_unstable();
        ranked.into_iter().map(|(_, l)| l).collect()
    }

    /// CSV with absent ranks and sentiments rendered as `-`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let (a, b) = (&self.target1, &self.target2);
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "label".to_string(),
            format!("rank_{a}"),
            format!("rank_{b}"),
            "sent_w".to_string(),
            format!("sentiment_{a}"),
            format!("sentiment_{b}"),
            format!("word_sentiment_{a}"),
            format!("word_sentiment_{b}"),
            format!("clusters_{a}"),
            format!("clusters_{b}"),
            format!("words_{a}"),
            format!("words_{b}"),
        ])?;
        for r in &self.rows {
            w.write_record([
                r.label.clone(),
                dash(r.rank1),
                dash(r.rank2),
                r.sent_w.to_string(),
                dash(r.sentiment1),
                dash(r.sentiment2),
                dash(r.word_sentiment1),
                dash(r.word_sentiment2),
                r.clusters1.to_string(),
                r.clusters2.to_string(),
                r.words1.to_string(),
                r.words2.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Side-by-side label ranks of two labeled partitions.
///
/// Rows are ordered by the better of the two ranks, then by the side-1 rank
/// (absent last), then by label.
pub fn compare_targets(
    labeled1: &LabeledPartition,
    labeled2: &LabeledPartition,
    names: (&str, &str),
) -> LabelRankTable {
    let r1: BTreeMap<String, LabelRank> = rank_labels(labeled1).into_iter().map(|r| (r.label.clone(), r)).collect();
    let r2: BTreeMap<String, LabelRank> = rank_labels(labeled2).into_iter().map(|r| (r.label.clone(), r)).collect();
    let labels: BTreeSet<&String> = r1.keys().chain(r2.keys()).collect();
    let mut rows: Vec<LabelRow> = labels
        .into_iter()
        .map(|label| {
            let a = r1.get(label);
            let b = r2.get(label);
            let sent_w = match (a, b) {
                (Some(a), Some(b)) if b.rank < a.rank => b.sentiment,
                (Some(a), _) => a.sentiment,
                (None, Some(b)) => b.sentiment,
                (None, None) => unreachable!("label comes from one of the sides"),
            };
            LabelRow {
                label: label.clone(),
                rank1: a.map(|x| x.rank),
                rank2: b.map(|x| x.rank),
                sent_w,
                sentiment1: a.map(|x| x.sentiment),
                sentiment2: b.map(|x| x.sentiment),
                word_sentiment1: a.map(|x| x.word_sentiment),
                word_sentiment2: b.map(|x| x.word_sentiment),
                clusters1: a.map_or(0, |x| x.clusters),
                clusters2: b.map_or(0, |x| x.clusters),
                words1: a.map_or(0, |x| x.words),
                words2: b.map_or(0, |x| x.words),
            }
        })
        .collect();
    let key = |r: &LabelRow| {
        let best = r.rank1.unwrap_or(usize::MAX).min(r.rank2.unwrap_or(usize::MAX));
        (best, r.rank1.unwrap_or(usize::MAX))
    };
    rows.sort_by(|x, y| key(x).cmp(&key(y)).then_with(|| x.label.cmp(&y.label)));
    LabelRankTable {
        target1: names.0.to_string(),
        target2: names.1.to_string(),
        rows,
    }
}

/// Concept name → labels standing for it.
pub type ConceptMap = BTreeMap<String, Vec<String>>;

/// The career/family/arts/science/maths mapping onto bundled labels.
pub fn bundled_concepts() -> ConceptMap {
    serde_json::from_str(resources::CONCEPTS).expect("bundled concept map is valid")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptCount {
    pub concept: String,
    pub clusters1: usize,
    pub clusters2: usize,
    pub words1: usize,
    pub words2: usize,
}

/// Clusters (and their words) carrying any label mapped to each concept.
pub fn concept_frequency(
    labeled1: &LabeledPartition,
    labeled2: &LabeledPartition,
    concepts: &ConceptMap,
    lex: &SemanticLexicon,
) -> Result<Vec<ConceptCount>> {
    for (concept, labels) in concepts {
        if let Some(bad) = labels.iter().find(|l| !lex.inventory().contains(*l)) {
            return Err(Error::Config(format!(
                "concept {concept:?} maps to {bad:?}, which is not a label of the semantic lexicon"
            )));
        }
    }
    let tally = |side: &LabeledPartition, labels: &[String]| {
        side.clusters
            .iter()
            .filter(|c| c.labels.iter().any(|l| labels.contains(l)))
            .fold((0, 0), |(n, w), c| (n + 1, w + c.words.len()))
    };
    Ok(concepts
        .iter()
        .map(|(concept, labels)| {
            let (clusters1, words1) = tally(labeled1, labels);
            let (clusters2, words2) = tally(labeled2, labels);
            ConceptCount {
                concept: concept.clone(),
                clusters1,
                clusters2,
                words1,
                words2,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const INTIMATE: &str = "Relationship: Intimate/sexual";

    fn lex() -> SemanticLexicon {
        SemanticLexicon::parse_tsv(
            format!("lesbian\t{INTIMATE}\nbisexual\t{INTIMATE}|People\npretty\tBeauty\nugly\tBeauty\nrich\tMoney\n")
                .as_bytes(),
        )
        .unwrap()
    }

    fn partition(clusters: &[&[&str]], centroids: &[[f64; 2]]) -> ClusterPartition {
        ClusterPartition::new(
            clusters.iter().map(|c| c.iter().map(|w| w.to_string()).collect()).collect(),
            centroids.iter().map(|c| c.to_vec()).collect(),
            0.5,
            0,
        )
        .unwrap()
    }

    #[test]
    fn tags_by_first_label_or_all() {
        let lex = lex();
        let counts = tag_cluster(&lex, &["lesbian", "bisexual"], LabelMode::FirstLabel);
        assert_eq!(counts, BTreeMap::from([(INTIMATE.to_string(), 2)]));
        let all = tag_cluster(&lex, &["lesbian", "bisexual"], LabelMode::AllLabels);
        assert_eq!(all.get("People"), Some(&1));
        assert!(tag_cluster(&lex, &["zzz"], LabelMode::FirstLabel).is_empty());
        assert_eq!(lex.labels("Lesbian"), [INTIMATE]);
    }

    #[test]
    fn untaggable_singleton_inherits_from_nearest() {
        let p = partition(
            &[&["lesbian", "bisexual"], &["interracial"], &["pretty", "ugly"]],
            &[[1.0, 0.2], [0.9, 0.3], [0.0, 1.0]],
        );
        let out = label_clusters(&p, &lex(), &SentimentLexicon::default(), LabelMode::FirstLabel).unwrap();
        assert_eq!(out.clusters[1].labels, [INTIMATE]);
        assert_eq!(out.clusters[1].label_source, LabelSource::Propagated);
        assert_eq!(out.clusters[1].donor, Some(0));
        assert_eq!(out.clusters[2].labels, ["Beauty"]);
    }

    #[test]
    fn ties_keep_every_top_label() {
        let p = partition(&[&["pretty", "rich"]], &[[1.0, 0.0]]);
        let out = label_clusters(&p, &lex(), &SentimentLexicon::default(), LabelMode::FirstLabel).unwrap();
        assert_eq!(out.clusters[0].labels, ["Beauty", "Money"]);
    }

    #[test]
    fn nothing_taggable_is_an_error() {
        let p = partition(&[&["x"], &["y"]], &[[1.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(
            label_clusters(&p, &lex(), &SentimentLexicon::default(), LabelMode::FirstLabel),
            Err(Error::Labeling(_))
        ));
    }

    fn labeled(specs: &[(&[&str], usize, f64)]) -> LabeledPartition {
        LabeledPartition {
            clusters: specs
                .iter()
                .map(|(labels, size, sentiment)| LabeledCluster {
                    words: (0..*size).map(|i| format!("w{i}")).collect(),
                    labels: labels.iter().map(|s| s.to_string()).collect(),
                    label_source: LabelSource::Direct,
                    donor: None,
                    tag_counts: BTreeMap::new(),
                    sentiment: *sentiment,
                })
                .collect(),
            r: 0.15,
            k: specs.len(),
            seed: 0,
            mode: LabelMode::FirstLabel,
        }
    }

    #[test]
    fn rank_by_clusters_then_words() {
        let l = labeled(&[(&["A"], 1, 0.0), (&["A"], 1, 0.0), (&["A"], 1, 0.0), (&["B"], 1, 0.0)]);
        let r = rank_labels(&l);
        assert_eq!((r[0].label.as_str(), r[0].rank), ("A", 1));
        assert_eq!((r[1].label.as_str(), r[1].rank), ("B", 2));

        let l = labeled(&[(&["A"], 2, 0.0), (&["A"], 2, 0.0), (&["B"], 5, 0.0), (&["B"], 4, 0.0)]);
        assert_eq!(rank_labels(&l)[0].label, "B");
    }

    #[test]
    fn comparison_table_by_hand() {
        let one = labeled(&[(&["A"], 3, 0.4), (&["A"], 1, -0.2), (&["B"], 2, 0.1)]);
        let two = labeled(&[(&["B"], 2, -0.5), (&["C"], 1, 0.3)]);
        let t = compare_targets(&one, &two, ("female", "male"));
        let a = t.row("A").unwrap();
        assert_eq!((a.rank1, a.rank2), (Some(1), None));
        assert!((a.sent_w - 0.1).abs() < 1e-12);
        assert!((a.word_sentiment1.unwrap() - 0.25).abs() < 1e-12);
        let b = t.row("B").unwrap();
        assert_eq!((b.rank1, b.rank2), (Some(2), Some(1)));
        assert_eq!(b.sent_w, -0.5);
        assert_eq!(t.row("C").unwrap().rank1, None);
        assert_eq!(t.side(1), ["A", "B"]);
        assert_eq!(t.side(2), ["B", "C"]);

        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("label,rank_female,rank_male,sent_w,"));
        assert!(text.contains("\nA,1,-,"));
    }

    #[test]
    fn concept_counts() {
        let lex = lex();
        let one = labeled(&[(&["Money"], 3, 0.0), (&["Beauty", "Money"], 2, 0.0), (&["Beauty"], 1, 0.0)]);
        let two = labeled(&[(&["Beauty"], 4, 0.0)]);
        let map = ConceptMap::from([("career".to_string(), vec!["Money".to_string()])]);
        let counts = concept_frequency(&one, &two, &map, &lex).unwrap();
        assert_eq!(
            counts,
            [ConceptCount {
                concept: "career".into(),
                clusters1: 2,
                clusters2: 0,
                words1: 5,
                words2: 0
            }]
        );
        assert!(concept_frequency(&one, &two, &ConceptMap::new(), &lex).unwrap().is_empty());
        let bad = ConceptMap::from([("x".to_string(), vec!["Nope".to_string()])]);
        assert!(matches!(concept_frequency(&one, &two, &bad, &lex), Err(Error::Config(_))));
    }

    #[test]
    fn bundled_concepts_use_bundled_labels() {
        let lex = SemanticLexicon::bundled();
        let concepts = bundled_concepts();
        assert_eq!(concepts.len(), 5);
        for labels in concepts.values() {
            for l in labels {
                assert!(lex.inventory().contains(l), "{l}");
            }
        }
        assert_eq!(lex.labels("lesbian"), [INTIMATE]);
        assert!(lex.labels("interracial").contains(&INTIMATE.to_string()));
    }
}
