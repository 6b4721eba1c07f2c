//! Model configuration resolution: command-line flag, then config file, then
//! built-in defaults for the chosen architecture.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use braglab_core::featurizers::FusionLexicon;
use braglab_core::Task;
use braglab_models::{Arch, ModelConfig};
use clap::Args;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// TOML file whose keys override any model configuration field.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// majority, lr-bow, bigru-att, transformer or transformer-mag.
    #[arg(long)]
    pub model: Option<Arch>,
    /// binary or seven-class.
    #[arg(long)]
    pub task: Option<Task>,
    /// Pretrained encoder id or directory, or `scratch`.
    #[arg(long)]
    pub encoder: Option<String>,
    /// Lexicon fused into the encoder: nrc, liwc or clusters.
    #[arg(long)]
    pub fusion: Option<FusionLexicon>,
    /// Lexicon file for the fusion features (bundled stand-in if absent).
    #[arg(long)]
    pub fusion_resource: Option<PathBuf>,
    #[arg(long)]
    pub projection_dim: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub max_seq_len: Option<usize>,
    #[arg(long)]
    pub hidden_size: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub class_weighting: Option<bool>,
    /// Comma-separated seeds, one model per seed.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Word-vector text file for the BiGRU.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    /// L2 penalty of the logistic regression.
    #[arg(long)]
    pub l2: Option<f64>,
}

fn read_table(path: &Path) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let table: toml::Table = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    match serde_json::to_value(table)? {
        Value::Object(m) => Ok(m),
        _ => unreachable!("a TOML table is an object"),
    }
}

fn enum_field<T: std::str::FromStr>(file: &Map<String, Value>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match file.get(key) {
        None => Ok(None),
        Some(Value::String(s)) => s.parse().map(Some).map_err(|e| anyhow::anyhow!("`{key}` in config file: {e}")),
        Some(other) => bail!("`{key}` in config file must be a string, got {other}"),
    }
}

impl ModelArgs {
    /// The effective configuration. `default_arch` applies when neither the
    /// flag nor the file names an architecture.
    pub fn resolve(&self, default_arch: Arch) -> Result<ModelConfig> {
        let file = match &self.config {
            Some(p) => read_table(p)?,
            None => Map::new(),
        };
        let arch = match self.model {
            Some(a) => a,
            None => enum_field(&file, "arch")?.unwrap_or(default_arch),
        };
        let task = match self.task {
            Some(t) => t,
            None => enum_field(&file, "task")?.unwrap_or(Task::Binary),
        };
        let fusion = match self.fusion {
            Some(f) => Some(f),
            None => enum_field::<FusionLexicon>(&file, "fusion_lexicon")?,
        };
        let base = match (arch, fusion) {
            (Arch::TransformerMag, Some(lex)) => ModelConfig::fusion(task, lex),
            _ => ModelConfig::new(arch, task),
        };
        let mut merged = match serde_json::to_value(&base)? {
            Value::Object(m) => m,
            _ => unreachable!(),
        };
        for (k, v) in file {
            merged.insert(k, v);
        }
        let mut config: ModelConfig = serde_json::from_value(Value::Object(merged)).context("config file")?;
        config.arch = arch;
        config.task = task;
        if let Some(f) = fusion {
            config.fusion_lexicon = Some(f);
        }
        macro_rules! set {
            ($flag:ident => $field:ident) => {
                if let Some(v) = &self.$flag {
                    config.$field = v.clone().into();
                }
            };
        }
        set!(encoder => encoder_name);
        set!(fusion_resource => fusion_resource);
        set!(projection_dim => projection_dim);
        set!(lr => learning_rate);
        set!(epochs => epochs);
        set!(patience => patience);
        set!(batch_size => batch_size);
        set!(max_seq_len => max_seq_len);
        set!(hidden_size => hidden_size);
        set!(dropout => dropout);
        set!(class_weighting => class_weighting);
        set!(seeds => seeds);
        set!(embeddings => embeddings_path);
        set!(embedding_dim => embedding_dim);
        set!(l2 => l2_strength);
        config.validate()?;
        Ok(config)
    }
}
