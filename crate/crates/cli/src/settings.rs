//! Resolving a [`PipelineConfig`] from preset, config file, environment and
//! flags (later sources win).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use biaslens::bias::{parse_pos_filter, PosTag};
use biaslens::corpus::InputFormat;
use biaslens::pipeline::PipelineConfig;
use clap::Args;
use serde_json::{Map, Value};

pub const PRESETS: [&str; 6] = ["google_news", "the_red_pill", "dating_advice", "atheism", "the_donald", "mini"];

/// Settings bundled for the experiments the tool was built around.
pub fn preset(name: &str) -> Result<PipelineConfig> {
    let base = PipelineConfig::default();
    let cfg = match name {
        "google_news" => PipelineConfig {
            k: 5000,
            pos: vec![PosTag::Adjective, PosTag::Noun],
            dim: 300,
            ..base
        },
        "the_red_pill" => PipelineConfig { k: 300, ..base },
        "dating_advice" => PipelineConfig { k: 200, ..base },
        "atheism" => PipelineConfig {
            target1: "islam".into(),
            target2: "christianity".into(),
            k: 300,
            ..base
        },
        "the_donald" => PipelineConfig {
            target1: "white_names".into(),
            target2: "hispanic_names".into(),
            k: 300,
            ..base
        },
        "mini" => PipelineConfig {
            dim: 32,
            min_count: 3,
            k: 100,
            deterministic: true,
            ..base
        },
        other => bail!("unknown preset {other:?}; known presets: {}", PRESETS.join(", ")),
    };
    Ok(cfg)
}

#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArgs {
    /// Flat TOML file whose keys are the configuration fields.
    #[arg(long, global = true, env = "BIASLENS_CONFIG")]
    pub config: Option<PathBuf>,
    /// Start from a bundled preset.
    #[arg(long, global = true, env = "BIASLENS_PRESET")]
    pub preset: Option<String>,
    #[arg(long, global = true, env = "BIASLENS_CORPUS")]
    pub corpus: Option<PathBuf>,
    /// jsonl, jsonl-gzip or plain-text (default: from the extension).
    #[arg(long, global = true, env = "BIASLENS_FORMAT")]
    pub format: Option<InputFormat>,
    #[arg(long, global = true, env = "BIASLENS_MODEL")]
    pub model: Option<PathBuf>,
    /// Two target sets, preset names or JSON files: `female,male`.
    #[arg(long, global = true, env = "BIASLENS_TARGETS")]
    pub targets: Option<String>,
    /// Allowed parts of speech, e.g. `adjective,noun`.
    #[arg(long, global = true, env = "BIASLENS_POS")]
    pub pos: Option<String>,
    #[arg(long, global = true, env = "BIASLENS_K")]
    pub k: Option<usize>,
    #[arg(long, global = true, env = "BIASLENS_R")]
    pub r: Option<f64>,
    #[arg(long, global = true, env = "BIASLENS_LEXICON_SEM")]
    pub lexicon_sem: Option<PathBuf>,
    #[arg(long, global = true, env = "BIASLENS_LEXICON_SENT")]
    pub lexicon_sent: Option<PathBuf>,
    #[arg(long, global = true, env = "BIASLENS_LEXICON_POS")]
    pub lexicon_pos: Option<PathBuf>,
    #[arg(long, global = true, env = "BIASLENS_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, env = "BIASLENS_SEED")]
    pub seed: Option<u64>,
    #[arg(long, global = true, env = "BIASLENS_WORKERS")]
    pub workers: Option<usize>,
    /// Single-worker training for bit-identical reruns.
    #[arg(long, global = true, env = "BIASLENS_DETERMINISTIC")]
    pub deterministic: bool,
}

fn read_file(path: &Path) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let table: toml::Table = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    match serde_json::to_value(table)? {
        Value::Object(map) => Ok(map),
        _ => unreachable!("a TOML table is an object"),
    }
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<PipelineConfig> {
        let mut file = match &self.config {
            Some(path) => read_file(path)?,
            None => Map::new(),
        };
        let preset_name = self
            .preset
            .clone()
            .or_else(|| file.remove("preset").and_then(|v| v.as_str().map(String::from)));
        file.remove("preset");
        let base = match preset_name {
            Some(name) => preset(&name)?,
            None => PipelineConfig::default(),
        };
        let Value::Object(mut merged) = serde_json::to_value(&base)? else {
            unreachable!("config serializes to an object")
        };
        merged.extend(file);
        let mut cfg: PipelineConfig =
            serde_json::from_value(Value::Object(merged)).context("invalid configuration")?;

        if let Some(v) = &self.corpus {
            cfg.corpus = Some(v.clone());
        }
        if let Some(v) = self.format {
            cfg.format = Some(v);
        }
        if let Some(v) = &self.model {
            cfg.model = Some(v.clone());
        }
        if let Some(spec) = &self.targets {
            let (a, b) = spec
                .split_once(',')
                .with_context(|| format!("--targets expects two comma-separated sets, got {spec:?}"))?;
            cfg.target1 = a.trim().to_string();
            cfg.target2 = b.trim().to_string();
        }
        if let Some(spec) = &self.pos {
            cfg.pos = parse_pos_filter(spec)?.into_iter().collect();
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.r {
            cfg.r = v;
        }
        if let Some(v) = &self.lexicon_sem {
            cfg.lexicon_sem = Some(v.clone());
        }
        if let Some(v) = &self.lexicon_sent {
            cfg.lexicon_sent = Some(v.clone());
        }
        if let Some(v) = &self.lexicon_pos {
            cfg.lexicon_pos = Some(v.clone());
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        cfg.deterministic |= self.deterministic;
        Ok(cfg)
    }
}
