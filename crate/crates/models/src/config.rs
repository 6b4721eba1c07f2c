use std::path::PathBuf;

use braglab_core::featurizers::FusionLexicon;
use braglab_core::Task;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Arch {
    Majority,
    LrBow,
    BigruAtt,
    Transformer,
    TransformerMag,
}

impl Arch {
    pub fn is_neural(self) -> bool {
        matches!(self, Arch::BigruAtt | Arch::Transformer | Arch::TransformerMag)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Arch::Majority => "majority",
            Arch::LrBow => "lr-bow",
            Arch::BigruAtt => "bigru-att",
            Arch::Transformer => "transformer",
            Arch::TransformerMag => "transformer-mag",
        }
    }
}

impl std::fmt::Display for Arch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Arch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "majority" => Ok(Arch::Majority),
            "lr-bow" | "lrbow" => Ok(Arch::LrBow),
            "bigru-att" | "bigru" => Ok(Arch::BigruAtt),
            "transformer" => Ok(Arch::Transformer),
            "transformer-mag" | "mag" => Ok(Arch::TransformerMag),
            _ => Err(Error::Config(format!("unknown model architecture `{s}`"))),
        }
    }
}

/// Encoder name that selects a randomly initialised encoder with a
/// word-level vocabulary built from the training data.
pub const SCRATCH_ENCODER: &str = "scratch";

pub const DEFAULT_SEEDS: [u64; 3] = [13, 42, 2022];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub arch: Arch,
    /// Local directory, hub-style id resolved against local caches, or
    /// [`SCRATCH_ENCODER`].
    pub encoder_name: String,
    pub task: Task,
    pub fusion_lexicon: Option<FusionLexicon>,
    /// Lexicon file for fusion; the bundled stand-in when absent.
    pub fusion_resource: Option<PathBuf>,
    pub projection_dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub max_seq_len: usize,
    pub hidden_size: usize,
    /// Layers and heads of a scratch encoder.
    pub encoder_layers: usize,
    pub encoder_heads: usize,
    pub dropout: f64,
    pub class_weighting: bool,
    pub seeds: Vec<u64>,
    pub beta_shift: f64,
    pub epsilon: f64,
    pub l2_strength: f64,
    pub lbfgs_max_iter: usize,
    /// Word vectors for the BiGRU, in GloVe text format.
    pub embeddings_path: Option<PathBuf>,
    pub embedding_dim: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::new(Arch::Transformer, Task::Binary)
    }
}

impl ModelConfig {
    /// Defaults for one architecture and task.
    pub fn new(arch: Arch, task: Task) -> Self {
        let learning_rate = match arch {
            Arch::BigruAtt => 1e-2,
            Arch::Transformer | Arch::TransformerMag => 3e-6,
            _ => 0.0,
        };
        ModelConfig {
            arch,
            encoder_name: "vinai/bertweet-base".into(),
            task,
            fusion_lexicon: None,
            fusion_resource: None,
            projection_dim: 0,
            learning_rate,
            epochs: 40,
            patience: 3,
            batch_size: 32,
            max_seq_len: 50,
            hidden_size: 128,
            encoder_layers: 2,
            encoder_heads: 4,
            dropout: if arch == Arch::BigruAtt { 0.2 } else { 0.1 },
            class_weighting: task == Task::SevenClass,
            seeds: DEFAULT_SEEDS.to_vec(),
            beta_shift: 1.0,
            epsilon: 1e-6,
            l2_strength: 1.0,
            lbfgs_max_iter: 1000,
            embeddings_path: None,
            embedding_dim: 200,
        }
    }

    /// A fusion config with the projection width matching the lexicon.
    pub fn fusion(task: Task, lexicon: FusionLexicon) -> Self {
        ModelConfig {
            fusion_lexicon: Some(lexicon),
            projection_dim: lexicon.default_projection_dim(),
            ..ModelConfig::new(Arch::TransformerMag, task)
        }
    }

    pub fn uses_scratch_encoder(&self) -> bool {
        self.encoder_name == SCRATCH_ENCODER
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        let mut uniq = self.seeds.clone();
        uniq.sort_unstable();
        uniq.dedup();
        if uniq.len() != self.seeds.len() {
            return bad(format!("seeds must be distinct, got {:?}", self.seeds));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        if self.arch.is_neural() {
            if self.batch_size == 0 || self.max_seq_len < 2 || self.epochs == 0 || self.patience == 0 {
                return bad("batch_size, epochs and patience must be positive and max_seq_len at least 2".into());
            }
            if !(self.learning_rate > 0.0) {
                return bad(format!("learning rate must be positive, got {}", self.learning_rate));
            }
            if self.hidden_size == 0 {
                return bad("hidden_size must be positive".into());
            }
        }
        if self.uses_scratch_encoder() && self.hidden_size % self.encoder_heads.max(1) != 0 {
            return bad(format!(
                "hidden_size {} is not divisible by {} heads",
                self.hidden_size, self.encoder_heads
            ));
        }
        match (self.arch, self.fusion_lexicon) {
            (Arch::TransformerMag, None) => return bad("transformer-mag needs a fusion lexicon".into()),
            (Arch::TransformerMag, Some(lex)) => {
                if ![200, 400, 768].contains(&self.projection_dim) {
                    return bad(format!("projection_dim must be 200, 400 or 768, got {}", self.projection_dim));
                }
                if self.projection_dim != lex.default_projection_dim() {
                    log::warn!(
                        "projection_dim {} differs from the {:?} default {}",
                        self.projection_dim,
                        lex,
                        lex.default_projection_dim()
                    );
                }
                if !(self.beta_shift > 0.0) || !(self.epsilon > 0.0) {
                    return bad("beta_shift and epsilon must be positive".into());
                }
            }
            (_, Some(_)) => return bad(format!("{} does not take a fusion lexicon", self.arch)),
            _ => {}
        }
        if self.arch == Arch::LrBow && !(self.l2_strength >= 0.0) {
            return bad("l2_strength must be non-negative".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = ModelConfig::new(Arch::Transformer, Task::Binary);
        assert_eq!((c.max_seq_len, c.batch_size, c.seeds.len()), (50, 32, 3));
        assert!(!c.class_weighting);
        assert!(ModelConfig::new(Arch::Transformer, Task::SevenClass).class_weighting);
        let f = ModelConfig::fusion(Task::Binary, FusionLexicon::Liwc);
        assert_eq!(f.projection_dim, 400);
        f.validate().unwrap();
        assert_eq!(ModelConfig::fusion(Task::SevenClass, FusionLexicon::Clusters).projection_dim, 768);
    }

    #[test]
    fn validation() {
        let mut c = ModelConfig::fusion(Task::Binary, FusionLexicon::Nrc);
        c.projection_dim = 300;
        assert!(c.validate().is_err());
        let mut c = ModelConfig::new(Arch::TransformerMag, Task::Binary);
        assert!(c.validate().is_err());
        c.arch = Arch::BigruAtt;
        c.seeds = vec![1, 1];
        assert!(c.validate().is_err());
    }

    #[test]
    fn serde_round_trip() {
        let c = ModelConfig::fusion(Task::SevenClass, FusionLexicon::Clusters);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<ModelConfig>(&json).unwrap(), c);
        assert_eq!("lr_bow".parse::<Arch>().unwrap(), Arch::LrBow);
    }
}
