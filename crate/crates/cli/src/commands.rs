use std::path::Path;

use anyhow::{bail, Context, Result};
use biaslens::bias::{bias_distribution, rank_biased, BiasRanking, TargetSet};
use biaslens::cluster::{kmeans_partition, ClusterPartition};
use biaslens::corpus::{write_jsonl, TokenizedCorpus};
use biaslens::embedding::{train_skipgram, EmbeddingModel, ModelFormat};
use biaslens::label::{
    bundled_concepts, compare_targets, concept_frequency, label_clusters, rank_labels, LabeledPartition,
};
use biaslens::pipeline::{
    file_stem, load_model, run_pipeline, save_model, write_bundle, write_file, write_json, Artifact, Lexicons,
    PipelineConfig, Seeds, Setup, MODEL_FILE,
};
use biaslens::synthetic::{generate_planted_corpus, SyntheticConfig};
use biaslens::validation::{
    bootstrap_stability, direct_bias_rank, granularity_sweep, min_count_sweep, weat, DEFAULT_MAX_PERMUTATIONS,
};
use serde::Serialize;

/// Files written by a command, relative to its output directory.
pub type Written = Vec<String>;

fn tag<T>(cfg: &PipelineConfig, model_hash: &str, body: T) -> Artifact<T> {
    Artifact {
        config_hash: cfg.hash(),
        model_hash: model_hash.to_string(),
        body,
    }
}

fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T]) -> biaslens::Result<()> {
    write_file(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        for row in rows {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    })
}

fn model(cfg: &PipelineConfig) -> Result<EmbeddingModel> {
    let path = cfg.model.as_ref().context("a model is required (--model)")?;
    Ok(load_model(path, cfg.model_format)?)
}

fn corpus(cfg: &PipelineConfig) -> Result<TokenizedCorpus> {
    let path = cfg.corpus.as_ref().context("a corpus is required (--corpus)")?;
    let format = cfg.corpus_format().expect("corpus is set");
    TokenizedCorpus::load(path, format).with_context(|| format!("reading {}", path.display()))
}

pub fn train(cfg: &PipelineConfig) -> Result<Written> {
    let corpus = corpus(cfg)?;
    let seeds = Seeds::derive(cfg.seed);
    let train = cfg.train_config(seeds.train);
    train.validate()?;
    let model = train_skipgram(&corpus, &train)?;
    #[derive(Serialize)]
    struct TrainSummary {
        corpus: biaslens::corpus::CorpusStats,
        vocab_size: usize,
        dim: usize,
        seed: u64,
    }
    let summary = TrainSummary {
        corpus: corpus.stats(),
        vocab_size: model.len(),
        dim: model.dim(),
        seed: seeds.train,
    };
    let hash = model.content_hash();
    write_bundle(&cfg.out, |dir| {
        save_model(&model, &dir.join(MODEL_FILE), Some(ModelFormat::Word2vecBinary))?;
        write_json(&dir.join("train.json"), &tag(cfg, &hash, &summary))
    })?;
    Ok(vec![MODEL_FILE.into(), "model.vocab".into(), "train.json".into()])
}

#[derive(Serialize)]
pub struct ModelSummary {
    pub vocab_size: usize,
    pub dim: usize,
    pub model_hash: String,
}

/// Load a model, report its shape and optionally save it in another format.
pub fn load(cfg: &PipelineConfig, save: Option<&Path>) -> Result<ModelSummary> {
    let model = model(cfg)?;
    if let Some(path) = save {
        save_model(&model, path, None)?;
    }
    Ok(ModelSummary {
        vocab_size: model.len(),
        dim: model.dim(),
        model_hash: model.content_hash(),
    })
}

pub fn rank(cfg: &PipelineConfig, direct: bool) -> Result<Written> {
    let model = model(cfg)?;
    let setup = Setup::from_config(cfg)?;
    let pos = &setup.lexicons.pos;
    let ranker = if direct { direct_bias_rank } else { rank_biased };
    let r1 = ranker(&model, &setup.s1, &setup.s2, pos, &setup.allowed, cfg.k)?;
    let r2 = ranker(&model, &setup.s2, &setup.s1, pos, &setup.allowed, cfg.k)?;
    let dist = bias_distribution(&model, &setup.s1, &setup.s2, pos, &setup.allowed)?;
    let names = vec![
        format!("ranking_{}.csv", file_stem(setup.s1.name())),
        format!("ranking_{}.csv", file_stem(setup.s2.name())),
        "bias_distribution.csv".to_string(),
    ];
    write_bundle(&cfg.out, |dir| {
        write_file(&dir.join(&names[0]), |w| r1.write_csv(w))?;
        write_file(&dir.join(&names[1]), |w| r2.write_csv(w))?;
        write_file(&dir.join(&names[2]), |w| dist.write_csv(w))
    })?;
    Ok(names)
}

/// Side name from an artifact file name such as `ranking_female.csv`.
fn side_name(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    for prefix in ["ranking_", "partition_", "labeled_"] {
        if let Some(rest) = stem.strip_prefix(prefix) {
            return rest.to_string();
        }
    }
    stem
}

pub fn cluster(cfg: &PipelineConfig, ranking: &Path, side: u8) -> Result<Written> {
    let model = model(cfg)?;
    let file = std::fs::File::open(ranking).with_context(|| format!("opening {}", ranking.display()))?;
    let words: Vec<String> = BiasRanking::read_csv(file)?.into_iter().map(|e| e.word).collect();
    let seeds = Seeds::derive(cfg.seed);
    let seed = match side {
        1 => seeds.cluster1,
        2 => seeds.cluster2,
        other => bail!("--side must be 1 or 2, got {other}"),
    };
    let partition = kmeans_partition(&model, &words, cfg.r, seed)?;
    let name = format!("partition_{}.json", side_name(ranking));
    let artifact = tag(cfg, &model.content_hash(), &partition);
    write_bundle(&cfg.out, |dir| write_json(&dir.join(&name), &artifact))?;
    Ok(vec![name])
}

pub fn label(cfg: &PipelineConfig, partition: &Path) -> Result<Written> {
    let input: Artifact<ClusterPartition> =
        Artifact::load(partition).with_context(|| format!("reading {}", partition.display()))?;
    let lex = Lexicons::load(cfg)?;
    let labeled = label_clusters(&input.body, &lex.semantic, &lex.sentiment, cfg.label_mode)?;
    let ranks = rank_labels(&labeled);
    let side = side_name(partition);
    let names = vec![format!("labeled_{side}.json"), format!("labels_{side}.csv")];
    let artifact = tag(cfg, &input.model_hash, &labeled);
    write_bundle(&cfg.out, |dir| {
        write_json(&dir.join(&names[0]), &artifact)?;
        write_csv_rows(&dir.join(&names[1]), &ranks)
    })?;
    Ok(names)
}

pub fn compare(cfg: &PipelineConfig, left: &Path, right: &Path) -> Result<Written> {
    let read = |p: &Path| -> Result<Artifact<LabeledPartition>> {
        Artifact::load(p).with_context(|| format!("reading {}", p.display()))
    };
    let (a, b) = (read(left)?, read(right)?);
    if a.model_hash != b.model_hash {
        bail!(
            "{} and {} come from different models ({} vs {}); refusing to compare",
            left.display(),
            right.display(),
            a.model_hash,
            b.model_hash
        );
    }
    let (n1, n2) = (side_name(left), side_name(right));
    let table = compare_targets(&a.body, &b.body, (&n1, &n2));
    let lex = Lexicons::load(cfg)?;
    let concepts = concept_frequency(&a.body, &b.body, &bundled_concepts(), &lex.semantic)?;
    let names = vec!["label_ranks.csv".to_string(), "label_ranks.json".to_string(), "concepts.csv".to_string()];
    let artifact = tag(cfg, &a.model_hash, &table);
    write_bundle(&cfg.out, |dir| {
        write_file(&dir.join(&names[0]), |w| table.write_csv(w))?;
        write_json(&dir.join(&names[1]), &artifact)?;
        write_csv_rows(&dir.join(&names[2]), &concepts)
    })?;
    Ok(names)
}

pub struct WeatSets {
    pub x: String,
    pub y: String,
    pub a: String,
    pub b: String,
    pub max_permutations: u64,
}

pub fn run_weat(cfg: &PipelineConfig, sets: &WeatSets) -> Result<Written> {
    let model = model(cfg)?;
    let resolve = |s: &str| TargetSet::resolve(s).with_context(|| format!("resolving target set {s:?}"));
    let (x, y, a, b) = (resolve(&sets.x)?, resolve(&sets.y)?, resolve(&sets.a)?, resolve(&sets.b)?);
    let result = weat(&model, &x, &y, &a, &b, sets.max_permutations, cfg.seed)?;
    let test = format!("{}-{}/{}-{}", x.name(), y.name(), a.name(), b.name());
    let artifact = tag(cfg, &model.content_hash(), &result);
    write_bundle(&cfg.out, |dir| {
        write_file(&dir.join("weat.csv"), |w| result.write_csv(&test, w))?;
        write_json(&dir.join("weat.json"), &artifact)
    })?;
    Ok(vec!["weat.csv".into(), "weat.json".into()])
}

pub fn default_max_permutations() -> u64 {
    DEFAULT_MAX_PERMUTATIONS
}

pub fn stability(cfg: &PipelineConfig, runs: usize, fraction: f64) -> Result<Written> {
    let corpus = corpus(cfg)?;
    let setup = Setup::from_config(cfg)?;
    let report = bootstrap_stability(&corpus, cfg, &setup, runs, fraction, cfg.seed)?;
    // every run trains its own model
    let artifact = tag(cfg, "", &report);
    write_bundle(&cfg.out, |dir| write_json(&dir.join("stability.json"), &artifact))?;
    Ok(vec!["stability.json".into()])
}

pub fn sweep_granularity(cfg: &PipelineConfig, r_values: &[f64]) -> Result<Written> {
    let model = model(cfg)?;
    let setup = Setup::from_config(cfg)?;
    let lex = &setup.lexicons;
    let seeds = Seeds::derive(cfg.seed);
    let hash = model.content_hash();
    let mut reports = Vec::new();
    for (s1, s2, seed) in [(&setup.s1, &setup.s2, seeds.cluster1), (&setup.s2, &setup.s1, seeds.cluster2)] {
        let ranking = rank_biased(&model, s1, s2, &lex.pos, &setup.allowed, cfg.k)?;
        let report =
            granularity_sweep(&model, &ranking.words(), r_values, &lex.semantic, &lex.sentiment, cfg.label_mode, seed)?;
        reports.push((format!("granularity_{}.json", file_stem(s1.name())), tag(cfg, &hash, report)));
    }
    write_bundle(&cfg.out, |dir| {
        reports.iter().try_for_each(|(name, report)| write_json(&dir.join(name), report))
    })?;
    Ok(reports.into_iter().map(|(n, _)| n).collect())
}

pub fn sweep_min_count(cfg: &PipelineConfig, thresholds: &[u64]) -> Result<Written> {
    let corpus = corpus(cfg)?;
    let setup = Setup::from_config(cfg)?;
    let cells = min_count_sweep(&corpus, thresholds, cfg, &setup)?;
    let artifact = tag(cfg, "", &cells);
    write_bundle(&cfg.out, |dir| write_json(&dir.join("min_count.json"), &artifact))?;
    Ok(vec!["min_count.json".into()])
}

pub fn run(cfg: &PipelineConfig) -> Result<Written> {
    Ok(run_pipeline(cfg)?.artifacts)
}

/// Write a planted-bias corpus as JSONL to `path`.
pub fn synth(path: &Path, synth: &SyntheticConfig) -> Result<usize> {
    let lex = Lexicons::bundled();
    let corpus = generate_planted_corpus(synth, &lex.pos, &lex.semantic)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    write_file(path, |w| write_jsonl(w, &corpus.records))?;
    Ok(corpus.records.len())
}
