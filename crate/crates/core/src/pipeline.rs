//! End-to-end orchestration: corpus → embeddings → rankings → clusters →
//! labels → report bundle on disk.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bias::{
    bias_distribution, rank_biased, BiasDistribution, BiasRanking, PosFilter, PosLexicon, PosTag, TargetSet,
};
use crate::cluster::{kmeans_partition, ClusterPartition};
use crate::corpus::{CorpusStats, InputFormat, TokenizedCorpus};
use crate::embedding::{load_embeddings, save_embeddings, to_hex, train_skipgram, EmbeddingModel, ModelFormat, TrainConfig, Vocabulary};
use crate::error::{Error, Result};
use crate::label::{compare_targets, label_clusters, LabelMode, LabelRankTable, LabeledPartition, SemanticLexicon};
use crate::resources;
use crate::sentiment::SentimentLexicon;

/// Everything a run needs, as one flat key-value document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub format: Option<InputFormat>,
    /// Pre-trained vectors; when set the corpus is not used for training.
    pub model: Option<PathBuf>,
    pub model_format: Option<ModelFormat>,
    pub dim: usize,
    pub window: usize,
    pub min_count: u64,
    pub epochs: usize,
    pub negatives: usize,
    pub alpha: f32,
    pub min_alpha: f32,
    pub subsample: Option<f64>,
    pub workers: usize,
    /// Forces a single training worker so reruns are bit-identical.
    pub deterministic: bool,
    /// Preset name or JSON file for each side.
    pub target1: String,
    pub target2: String,
    pub pos: Vec<PosTag>,
    pub k: usize,
    pub r: f64,
    pub label_mode: LabelMode,
    pub lexicon_sem: Option<PathBuf>,
    pub lexicon_sent: Option<PathBuf>,
    pub lexicon_pos: Option<PathBuf>,
    pub pos_suffixes: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        PipelineConfig {
            corpus: None,
            format: None,
            model: None,
            model_format: None,
            dim: train.dim,
            window: train.window,
            min_count: train.min_count,
            epochs: train.epochs,
            negatives: train.negatives,
            alpha: train.alpha,
            min_alpha: train.min_alpha,
            subsample: train.subsample,
            workers: train.workers,
            deterministic: false,
            target1: "female".into(),
            target2: "male".into(),
            pos: vec![PosTag::Adjective],
            k: 300,
            r: 0.15,
            label_mode: LabelMode::FirstLabel,
            lexicon_sem: None,
            lexicon_sent: None,
            lexicon_pos: None,
            pos_suffixes: None,
            out: PathBuf::from("biaslens-out"),
            seed: 1,
        }
    }
}

fn must_exist(what: &str, path: &Option<PathBuf>) -> Result<()> {
    match path {
        Some(p) if !p.exists() => Err(Error::Config(format!("{what} {} does not exist", p.display()))),
        _ => Ok(()),
    }
}

impl PipelineConfig {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            dim: self.dim,
            window: self.window,
            min_count: self.min_count,
            epochs: self.epochs,
            negatives: self.negatives,
            alpha: self.alpha,
            min_alpha: self.min_alpha,
            subsample: self.subsample,
            seed,
            workers: if self.deterministic { 1 } else { self.workers },
        }
    }

    pub fn corpus_format(&self) -> Option<InputFormat> {
        let path = self.corpus.as_ref()?;
        Some(self.format.unwrap_or_else(|| InputFormat::from_path(path)))
    }

    pub fn pos_filter(&self) -> PosFilter {
        self.pos.iter().copied().collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(Error::Config(format!("r = {} is outside (0, 1]", self.r)));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.corpus.is_none() && self.model.is_none() {
            return Err(Error::Config("either a corpus or a model is required".into()));
        }
        must_exist("corpus", &self.corpus)?;
        must_exist("model", &self.model)?;
        must_exist("semantic lexicon", &self.lexicon_sem)?;
        must_exist("sentiment lexicon", &self.lexicon_sent)?;
        must_exist("POS lexicon", &self.lexicon_pos)?;
        must_exist("suffix rules", &self.pos_suffixes)?;
        self.train_config(self.seed).validate()
    }

    /// SHA-256 of the configuration with the output location blanked, so the
    /// same analysis written to two places hashes the same.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = PathBuf::new();
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        to_hex(&Sha256::digest(&bytes))
    }
}

/// Per-stage seeds drawn in a fixed order from the master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub train: u64,
    pub cluster1: u64,
    pub cluster2: u64,
}

impl Seeds {
    pub fn derive(master: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master);
        Seeds {
            train: rng.gen(),
            cluster1: rng.gen(),
            cluster2: rng.gen(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Lexicons {
    pub pos: PosLexicon,
    pub semantic: SemanticLexicon,
    pub sentiment: SentimentLexicon,
}

impl Lexicons {
    pub fn bundled() -> Self {
        Lexicons {
            pos: PosLexicon::bundled(),
            semantic: SemanticLexicon::bundled(),
            sentiment: SentimentLexicon::bundled(),
        }
    }

    /// Configured files where given, bundled data otherwise.
    pub fn load(cfg: &PipelineConfig) -> Result<Self> {
        let pos = match &cfg.lexicon_pos {
            Some(path) => PosLexicon::load(path, cfg.pos_suffixes.as_deref())?,
            None if cfg.pos_suffixes.is_some() => {
                let words = PosLexicon::parse_tsv(resources::POS_LEXICON.as_bytes())?;
                let rules = PosLexicon::parse_tsv(resources::open(cfg.pos_suffixes.as_deref().unwrap())?)?;
                PosLexicon::new(words, rules)
            }
            None => PosLexicon::bundled(),
        };
        let semantic = match &cfg.lexicon_sem {
            Some(path) => SemanticLexicon::load(path)?,
            None => SemanticLexicon::bundled(),
        };
        let sentiment = match &cfg.lexicon_sent {
            Some(path) => SentimentLexicon::load(path)?,
            None => SentimentLexicon::bundled(),
        };
        Ok(Lexicons { pos, semantic, sentiment })
    }
}

/// Inputs of the analysis stages that follow embedding.
#[derive(Clone, Debug)]
pub struct Setup {
    pub s1: TargetSet,
    pub s2: TargetSet,
    pub allowed: PosFilter,
    pub k: usize,
    pub r: f64,
    pub mode: LabelMode,
    pub lexicons: Lexicons,
}

impl Setup {
    pub fn from_config(cfg: &PipelineConfig) -> Result<Self> {
        Ok(Setup {
            s1: TargetSet::resolve(&cfg.target1)?,
            s2: TargetSet::resolve(&cfg.target2)?,
            allowed: cfg.pos_filter(),
            k: cfg.k,
            r: cfg.r,
            mode: cfg.label_mode,
            lexicons: Lexicons::load(cfg)?,
        })
    }
}

/// Results of ranking, clustering and labeling both sides.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub distribution: BiasDistribution,
    pub ranking1: BiasRanking,
    pub ranking2: BiasRanking,
    pub partition1: ClusterPartition,
    pub partition2: ClusterPartition,
    pub labeled1: LabeledPartition,
    pub labeled2: LabeledPartition,
    pub table: LabelRankTable,
}

fn stage<T>(name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().map_err(|e| e.in_stage(name))
}

pub fn analyze(model: &EmbeddingModel, setup: &Setup, seeds: &Seeds) -> Result<Analysis> {
    let (s1, s2) = (&setup.s1, &setup.s2);
    let lex = &setup.lexicons;
    let (distribution, ranking1, ranking2) = stage("rank", || {
        Ok((
            bias_distribution(model, s1, s2, &lex.pos, &setup.allowed)?,
            rank_biased(model, s1, s2, &lex.pos, &setup.allowed, setup.k)?,
            rank_biased(model, s2, s1, &lex.pos, &setup.allowed, setup.k)?,
        ))
    })?;
    let (partition1, partition2) = stage("cluster", || {
        Ok((
            kmeans_partition(model, &ranking1.words(), setup.r, seeds.cluster1)?,
            kmeans_partition(model, &ranking2.words(), setup.r, seeds.cluster2)?,
        ))
    })?;
    let (labeled1, labeled2) = stage("label", || {
        Ok((
            label_clusters(&partition1, &lex.semantic, &lex.sentiment, setup.mode)?,
            label_clusters(&partition2, &lex.semantic, &lex.sentiment, setup.mode)?,
        ))
    })?;
    let table = compare_targets(&labeled1, &labeled2, (s1.name(), s2.name()));
    Ok(Analysis {
        distribution,
        ranking1,
        ranking2,
        partition1,
        partition2,
        labeled1,
        labeled2,
        table,
    })
}

/// Path of the `word count` file stored next to a model.
pub fn vocab_sidecar(model_path: &Path) -> PathBuf {
    model_path.with_extension("vocab")
}

/// Load vectors and, if present, the frequency sidecar.
pub fn load_model(path: &Path, format: Option<ModelFormat>) -> Result<EmbeddingModel> {
    let format = format.unwrap_or_else(|| ModelFormat::from_path(path));
    let mut model = load_embeddings(path, format)?;
    let sidecar = vocab_sidecar(path);
    if sidecar.exists() {
        let table = Vocabulary::read_counts(resources::open(&sidecar)?)?;
        model.vocab_mut().apply_counts(&table);
    }
    Ok(model)
}

/// Save vectors plus the frequency sidecar.
pub fn save_model(model: &EmbeddingModel, path: &Path, format: Option<ModelFormat>) -> Result<()> {
    let format = format.unwrap_or_else(|| ModelFormat::from_path(path));
    save_embeddings(model, path, format)?;
    write_file(&vocab_sidecar(path), |w| model.vocab().write_counts(w))
}

pub fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    body(&mut out)?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

/// A JSON artifact tagged with the configuration and model it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub config_hash: String,
    pub model_hash: String,
    #[serde(flatten)]
    pub body: T,
}

impl<T: for<'de> Deserialize<'de>> Artifact<T> {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(resources::open(path)?)?)
    }
}

/// Keeps file names portable whatever a target set is called.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: PipelineConfig,
    pub config_hash: String,
    pub model_hash: String,
    pub seed: u64,
    pub seeds: Seeds,
    pub corpus: Option<CorpusStats>,
    pub vocab_size: usize,
    pub dim: usize,
    pub artifacts: Vec<String>,
    /// Wall-clock seconds per stage; the only non-reproducible field.
    pub timings: BTreeMap<String, f64>,
}

impl Manifest {
    /// Tag `body` with this run's hashes.
    pub fn wrap<T>(&self, body: T) -> Artifact<T> {
        Artifact {
            config_hash: self.config_hash.clone(),
            model_hash: self.model_hash.clone(),
            body,
        }
    }
}

pub const MANIFEST: &str = "manifest.json";
pub const MODEL_FILE: &str = "model.bin";

/// Run every stage and write the report bundle into `cfg.out`.
///
/// Artifacts are written to a sibling staging directory that replaces the
/// output directory only once everything succeeded; on failure the staging
/// directory is removed and the error names the failing stage.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Manifest> {
    cfg.validate()?;
    let mut timings = BTreeMap::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, timings: &mut BTreeMap<String, f64>| {
        timings.insert(name.to_string(), clock.elapsed().as_secs_f64());
        clock = Instant::now();
    };
    let seeds = Seeds::derive(cfg.seed);
    let setup = stage("setup", || Setup::from_config(cfg))?;
    lap("setup", &mut timings);

    let corpus = match (&cfg.model, &cfg.corpus) {
        (None, Some(path)) => Some(stage("corpus", || {
            TokenizedCorpus::load(path, cfg.corpus_format().expect("corpus is set"))
        })?),
        _ => None,
    };
    lap("corpus", &mut timings);
    let model = stage("embed", || match (&cfg.model, &corpus) {
        (Some(path), _) => load_model(path, cfg.model_format),
        (None, Some(corpus)) => train_skipgram(corpus, &cfg.train_config(seeds.train)),
        (None, None) => unreachable!("validated"),
    })?;
    lap("embed", &mut timings);
    let analysis = analyze(&model, &setup, &seeds)?;
    lap("analyze", &mut timings);

    let config_hash = cfg.hash();
    let model_hash = model.content_hash();
    let mut manifest = Manifest {
        tool: "biaslens".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        config_hash,
        model_hash,
        seed: cfg.seed,
        seeds,
        corpus: corpus.as_ref().map(TokenizedCorpus::stats),
        vocab_size: model.len(),
        dim: model.dim(),
        artifacts: Vec::new(),
        timings: BTreeMap::new(),
    };
    stage("write", || {
        write_bundle(&cfg.out, |dir| {
            let names = write_artifacts(dir, &model, &setup, &analysis, &manifest)?;
            lap("write", &mut timings);
            manifest.artifacts = names;
            manifest.artifacts.push(MANIFEST.into());
            manifest.timings = timings;
            write_json(&dir.join(MANIFEST), &manifest)
        })
    })?;
    Ok(manifest)
}

fn write_artifacts(
    dir: &Path,
    model: &EmbeddingModel,
    setup: &Setup,
    analysis: &Analysis,
    manifest: &Manifest,
) -> Result<Vec<String>> {
    let side1 = file_stem(setup.s1.name());
    let side2 = file_stem(setup.s2.name());
    let mut names = vec![MODEL_FILE.to_string(), "model.vocab".to_string()];
    save_model(model, &dir.join(MODEL_FILE), Some(ModelFormat::Word2vecBinary))?;

    let mut csv = |name: String, f: &dyn Fn(&mut BufWriter<File>) -> Result<()>| -> Result<()> {
        write_file(&dir.join(&name), |w| f(w))?;
        names.push(name);
        Ok(())
    };
    csv("bias_distribution.csv".into(), &|w| analysis.distribution.write_csv(w))?;
    csv(format!("ranking_{side1}.csv"), &|w| analysis.ranking1.write_csv(w))?;
    csv(format!("ranking_{side2}.csv"), &|w| analysis.ranking2.write_csv(w))?;
    csv("label_ranks.csv".into(), &|w| analysis.table.write_csv(w))?;

    for (side, labeled) in [(&side1, &analysis.labeled1), (&side2, &analysis.labeled2)] {
        let name = format!("partition_{side}.json");
        write_json(&dir.join(&name), &manifest.wrap(labeled))?;
        names.push(name);
    }
    write_json(&dir.join("label_ranks.json"), &manifest.wrap(&analysis.table))?;
    names.push("label_ranks.json".into());
    Ok(names)
}

/// Populate a staging directory next to `out` and swap it into place.
pub fn write_bundle(out: &Path, fill: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    let name = out
        .file_name()
        .ok_or_else(|| Error::Config(format!("output path {} has no directory name", out.display())))?
        .to_string_lossy()
        .into_owned();
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(|e| Error::io(&parent, e))?;
    let pid = std::process::id();
    let staging = parent.join(format!(".{name}.partial-{pid}"));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
    }
    fs::create_dir(&staging).map_err(|e| Error::io(&staging, e))?;
    if let Err(e) = fill(&staging) {
        let _ = fs::remove_dir_all(&staging);
        return Err(e);
    }
    if out.exists() {
        let old = parent.join(format!(".{name}.old-{pid}"));
        fs::rename(out, &old).map_err(|e| Error::io(out, e))?;
        fs::rename(&staging, out).map_err(|e| Error::io(out, e))?;
        fs::remove_dir_all(&old).map_err(|e| Error::io(&old, e))?;
    } else {
        fs::rename(&staging, out).map_err(|e| Error::io(out, e))?;
    }
    Ok(())
}
