mod common;

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;
use std::path::PathBuf;

use biaslens::cluster::{intra_similarity, kmeans_partition, nearest_cluster};
use biaslens::corpus::{read_comments, tokenize, InputFormat, TokenizedCorpus};
use biaslens::embedding::build_vocab;
use biaslens::label::{tag_cluster, LabelMode, SemanticLexicon};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;

fn mini_corpus() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/mini_corpus.jsonl")
}

#[test]
fn ingest_reads_every_line_of_the_mini_corpus() {
    let file = std::fs::File::open(mini_corpus()).unwrap();
    let lines = std::io::BufReader::new(file)
        .lines()
        .filter(|l| !l.as_ref().unwrap().trim().is_empty())
        .count();
    let (records, stats) = read_comments(mini_corpus(), InputFormat::Jsonl).unwrap();
    assert_eq!(records.len(), lines);
    assert_eq!(stats.lines, lines);
    assert_eq!(stats.malformed + stats.missing_body, 0);
}

fn regex_tokenize(text: &str) -> Vec<Vec<String>> {
    let splitter = Regex::new(r"[.!?\n]").unwrap();
    let junk = Regex::new(r"[^a-z0-9']").unwrap();
    splitter
        .split(&text.to_lowercase())
        .map(|s| junk.replace_all(s, " ").split_whitespace().map(String::from).collect::<Vec<_>>())
        .filter(|s| !s.is_empty())
        .collect()
}

proptest! {
    #[test]
    fn tokenizer_matches_regex(text in r"[a-zA-Z0-9 '.,!?;:\n\-é]{0,120}") {
        prop_assert_eq!(tokenize(&text), regex_tokenize(&text));
    }
}

#[test]
fn vocabulary_counts_match_hash_count() {
    let corpus = TokenizedCorpus::load(mini_corpus(), InputFormat::Jsonl).unwrap();
    let mut counts: HashMap<String, u64> = HashMap::new();
    for sentence in corpus.sentences() {
        for token in sentence {
            *counts.entry(token.clone()).or_default() += 1;
        }
    }
    for min_count in [1, 5, 40] {
        let vocab = build_vocab(&corpus, min_count).unwrap();
        let expected = counts.values().filter(|&&c| c >= min_count).count();
        assert_eq!(vocab.len(), expected);
        for (i, w) in vocab.words().iter().enumerate() {
            assert_eq!(vocab.count(i), counts[w]);
        }
        assert!(vocab.counts().windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn tag_cluster_matches_manual_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let table: Vec<(String, Vec<String>)> = (0..200)
        .map(|i| {
            let n = rng.gen_range(1..4);
            (format!("t{i}"), (0..n).map(|_| format!("L{}", rng.gen_range(0..10))).collect())
        })
        .collect();
    let lex = SemanticLexicon::new(table.clone());
    let lookup: HashMap<_, _> = table.into_iter().collect();
    for _ in 0..100 {
        let words: Vec<String> = (0..rng.gen_range(1..15)).map(|_| format!("t{}", rng.gen_range(0..250))).collect();
        let mut first = BTreeMap::new();
        let mut all = BTreeMap::new();
        for w in &words {
            let Some(labels) = lookup.get(w) else { continue };
            // the lexicon keeps each label once per word
            let mut seen = Vec::new();
            for l in labels {
                if !seen.contains(l) {
                    seen.push(l.clone());
                }
            }
            *first.entry(seen[0].clone()).or_insert(0) += 1;
            for l in seen {
                *all.entry(l).or_insert(0) += 1;
            }
        }
        assert_eq!(tag_cluster(&lex, &words, LabelMode::FirstLabel), first);
        assert_eq!(tag_cluster(&lex, &words, LabelMode::AllLabels), all);
    }
}

#[test]
fn nearest_cluster_is_never_itself() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for round in 0..100 {
        let model = random_model(&mut rng, 60, 6);
        let words = pick(&mut rng, &model, 40);
        let p = kmeans_partition(&model, &words, rng.gen_range(0.05..=1.0), round).unwrap();
        if p.len() < 2 {
            assert!(nearest_cluster(&p, 0).is_err());
            continue;
        }
        for i in 0..p.len() {
            let j = nearest_cluster(&p, i).unwrap();
            assert_ne!(i, j);
            let best = (0..p.len())
                .filter(|&o| o != i)
                .map(|o| naive_cosine(&p.centroids[i], &p.centroids[o]))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((naive_cosine(&p.centroids[i], &p.centroids[j]) - best).abs() < 1e-12);
        }
    }
}

#[test]
fn intra_similarity_matches_nested_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let model = random_model(&mut rng, 100, 10);
    let words = pick(&mut rng, &model, 30);
    for r in [0.1, 0.3, 0.5] {
        let p = kmeans_partition(&model, &words, r, 4).unwrap();
        let mut total = 0.0;
        for c in &p.clusters {
            if c.len() == 1 {
                total += 1.0;
                continue;
            }
            let (mut s, mut n) = (0.0, 0.0);
            for a in c {
                for b in c {
                    if a < b {
                        s += naive_cosine(model.vector(a).unwrap(), model.vector(b).unwrap());
                        n += 1.0;
                    }
                }
            }
            total += s / n;
        }
        let want = total / p.len() as f64;
        assert!((intra_similarity(&model, &p).unwrap() - want).abs() < 1e-12);
    }
}

fn data_file(name: &str) -> String {
    std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)).unwrap()
}

#[test]
fn bundled_pos_lexicon_agrees_with_its_file() {
    use biaslens::bias::{pos_tag, PosLexicon, PosTag};
    let lex = PosLexicon::bundled();
    let text = data_file("pos_lexicon.tsv");
    let mut n = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (word, tag) = line.split_once('\t').unwrap();
        assert_eq!(pos_tag(&lex, word), tag.parse::<PosTag>().unwrap(), "{word}");
        n += 1;
    }
    assert!(n >= 1000);
}

#[test]
fn bundled_sentiment_lexicon_agrees_with_its_file() {
    use biaslens::sentiment::{word_sentiment, SentimentLexicon};
    let lex = SentimentLexicon::bundled();
    let text = data_file("sentiment_lexicon.tsv");
    let mut n = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (word, score) = line.split_once('\t').unwrap();
        assert_eq!(word_sentiment(&lex, word), score.parse::<f64>().unwrap(), "{word}");
        n += 1;
    }
    assert!(n >= 500);
    assert_eq!(word_sentiment(&lex, "zzzz-not-a-word"), 0.0);
}
