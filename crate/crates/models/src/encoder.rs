//! BERT/RoBERTa-compatible transformer encoder and the sequence classifier
//! built on it, with optional lexicon fusion right after the embeddings.

use std::path::{Path, PathBuf};

use candle_core::{DType, Tensor};
use serde::{Deserialize, Serialize};

use crate::mag::{Mag, MagParams, Projection};
use crate::nn::{masked_softmax, Ctx, Init, LayerNorm, Linear, ParamStore};
use crate::{Error, Result};

fn d_roberta() -> String {
    "roberta".into()
}
fn d_act() -> String {
    "gelu".into()
}
fn d_one() -> usize {
    1
}
fn d_eps() -> f64 {
    1e-5
}
fn d_drop() -> f64 {
    0.1
}
fn d_range() -> f64 {
    0.02
}

/// The subset of a Hugging Face `config.json` the encoder needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    #[serde(default = "d_roberta")]
    pub model_type: String,
    pub vocab_size: usize,
    pub hidden_size: usize,
    pub num_hidden_layers: usize,
    pub num_attention_heads: usize,
    pub intermediate_size: usize,
    #[serde(default = "d_act")]
    pub hidden_act: String,
    pub max_position_embeddings: usize,
    #[serde(default = "d_one")]
    pub type_vocab_size: usize,
    #[serde(default = "d_eps")]
    pub layer_norm_eps: f64,
    #[serde(default)]
    pub pad_token_id: u32,
    #[serde(default)]
    pub bos_token_id: Option<u32>,
    #[serde(default)]
    pub eos_token_id: Option<u32>,
    #[serde(default = "d_drop")]
    pub hidden_dropout_prob: f64,
    #[serde(default = "d_drop")]
    pub attention_probs_dropout_prob: f64,
    #[serde(default = "d_range")]
    pub initializer_range: f64,
}

impl EncoderConfig {
    /// A small BERT-style encoder for training from scratch.
    pub fn scratch(vocab_size: usize, hidden: usize, layers: usize, heads: usize, max_len: usize, dropout: f64) -> Self {
        EncoderConfig {
            model_type: "bert".into(),
            vocab_size,
            hidden_size: hidden,
            num_hidden_layers: layers,
            num_attention_heads: heads,
            intermediate_size: 4 * hidden,
            hidden_act: "gelu".into(),
            max_position_embeddings: max_len,
            type_vocab_size: 1,
            layer_norm_eps: 1e-12,
            pad_token_id: 0,
            bos_token_id: None,
            eos_token_id: None,
            hidden_dropout_prob: dropout,
            attention_probs_dropout_prob: dropout,
            initializer_range: 0.02,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    fn is_roberta(&self) -> bool {
        matches!(self.model_type.as_str(), "roberta" | "xlm-roberta" | "camembert")
    }

    /// Positions the model can address for a sequence of `len` tokens.
    pub fn max_tokens(&self) -> usize {
        if self.is_roberta() {
            self.max_position_embeddings.saturating_sub(self.pad_token_id as usize + 1)
        } else {
            self.max_position_embeddings
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_attention_heads == 0 || self.hidden_size % self.num_attention_heads != 0 {
            return Err(Error::Config(format!(
                "hidden size {} not divisible by {} heads",
                self.hidden_size, self.num_attention_heads
            )));
        }
        if !["gelu", "gelu_new", "relu"].contains(&self.hidden_act.as_str()) {
            return Err(Error::Config(format!("unsupported activation `{}`", self.hidden_act)));
        }
        Ok(())
    }
}

/// Resolves an encoder name to a local directory holding `config.json`,
/// `model.safetensors` and `tokenizer.json`. Looks at the name as a path,
/// then under `$BRAGLAB_MODEL_DIR`, then in the Hugging Face hub cache.
/// Nothing is downloaded.
pub fn resolve_encoder(name: &str) -> Result<PathBuf> {
    let complete = |p: &Path| ["config.json", "model.safetensors", "tokenizer.json"].iter().all(|f| p.join(f).is_file());
    let mut candidates = vec![PathBuf::from(name)];
    if let Ok(dir) = std::env::var("BRAGLAB_MODEL_DIR") {
        candidates.push(Path::new(&dir).join(name));
        candidates.push(Path::new(&dir).join(name.replace('/', "--")));
    }
    let hub = std::env::var("HF_HUB_CACHE").map(PathBuf::from).ok().or_else(|| {
        std::env::var("HF_HOME")
            .map(|h| Path::new(&h).join("hub"))
            .ok()
            .or_else(|| std::env::var("HOME").ok().map(|h| Path::new(&h).join(".cache/huggingface/hub")))
    });
    if let Some(hub) = hub {
        let snapshots = hub.join(format!("models--{}", name.replace('/', "--"))).join("snapshots");
        if let Ok(entries) = std::fs::read_dir(&snapshots) {
            let mut dirs: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
            dirs.sort();
            candidates.extend(dirs);
        }
    }
    candidates.into_iter().find(|p| complete(p)).ok_or_else(|| Error::EncoderNotFound(name.to_string()))
}

/// Renames keys of a pretrained checkpoint to the names used here.
pub fn normalize_pretrained_names(
    tensors: std::collections::HashMap<String, Tensor>,
    cfg: &EncoderConfig,
) -> std::collections::HashMap<String, Tensor> {
    let prefix = prefix(cfg);
    tensors
        .into_iter()
        .map(|(k, v)| {
            let k = k.replace("LayerNorm.gamma", "LayerNorm.weight").replace("LayerNorm.beta", "LayerNorm.bias");
            let k = if k.starts_with("embeddings.") || k.starts_with("encoder.") {
                format!("{prefix}.{k}")
            } else if let Some(rest) = k.strip_prefix("roberta.").or_else(|| k.strip_prefix("bert.")) {
                format!("{prefix}.{rest}")
            } else {
                k
            };
            (k, v)
        })
        .collect()
}

fn prefix(cfg: &EncoderConfig) -> &'static str {
    if cfg.is_roberta() {
        "roberta"
    } else {
        "bert"
    }
}

#[derive(Debug, Clone)]
struct Layer {
    query: Linear,
    key: Linear,
    value: Linear,
    attn_out: Linear,
    attn_norm: LayerNorm,
    intermediate: Linear,
    output: Linear,
    out_norm: LayerNorm,
}

#[derive(Debug, Clone)]
pub struct Encoder {
    pub config: EncoderConfig,
    word: Tensor,
    position: Tensor,
    token_type: Tensor,
    emb_norm: LayerNorm,
    layers: Vec<Layer>,
}

impl Encoder {
    pub fn new(store: &mut ParamStore, config: EncoderConfig) -> Result<Self> {
        config.validate()?;
        let p = prefix(&config);
        let d = config.hidden_size;
        let std = config.initializer_range;
        let eps = config.layer_norm_eps;
        let word = store.get(&format!("{p}.embeddings.word_embeddings.weight"), &[config.vocab_size, d], Init::Normal(std))?;
        let position = store.get(
            &format!("{p}.embeddings.position_embeddings.weight"),
            &[config.max_position_embeddings, d],
            Init::Normal(std),
        )?;
        let token_type = store.get(
            &format!("{p}.embeddings.token_type_embeddings.weight"),
            &[config.type_vocab_size, d],
            Init::Normal(std),
        )?;
        let emb_norm = LayerNorm::new(store, &format!("{p}.embeddings.LayerNorm"), d, eps)?;
        let mut layers = Vec::with_capacity(config.num_hidden_layers);
        for i in 0..config.num_hidden_layers {
            let n = format!("{p}.encoder.layer.{i}");
            let lin = |store: &mut ParamStore, name: &str, a, b| Linear::normal(store, &format!("{n}.{name}"), a, b, std);
            layers.push(Layer {
                query: lin(store, "attention.self.query", d, d)?,
                key: lin(store, "attention.self.key", d, d)?,
                value: lin(store, "attention.self.value", d, d)?,
                attn_out: lin(store, "attention.output.dense", d, d)?,
                attn_norm: LayerNorm::new(store, &format!("{n}.attention.output.LayerNorm"), d, eps)?,
                intermediate: lin(store, "intermediate.dense", d, config.intermediate_size)?,
                output: lin(store, "output.dense", config.intermediate_size, d)?,
                out_norm: LayerNorm::new(store, &format!("{n}.output.LayerNorm"), d, eps)?,
            });
        }
        Ok(Encoder {
            config,
            word,
            position,
            token_type,
            emb_norm,
            layers,
        })
    }

    /// Embedding layer output for `ids: [batch, len]` (u32) with
    /// left-aligned `mask: [batch, len]`.
    pub fn embed(&self, ids: &Tensor, mask: &Tensor, ctx: &mut Ctx) -> Result<Tensor> {
        let (b, l) = ids.dims2()?;
        if l > self.config.max_tokens() {
            return Err(Error::InvalidInput(format!(
                "sequence length {l} exceeds the encoder's {} positions",
                self.config.max_tokens()
            )));
        }
        let pad = self.config.pad_token_id;
        let rows = mask.to_dtype(DType::F64)?.to_vec2::<f64>()?;
        let positions: Vec<u32> = rows
            .iter()
            .flat_map(|row| {
                row.iter().enumerate().map(move |(i, &m)| match (self.is_roberta(), m > 0.0) {
                    (true, true) => pad + 1 + i as u32,
                    (true, false) => pad,
                    (false, _) => i as u32,
                })
            })
            .collect();
        let positions = Tensor::from_vec(positions, (b * l,), ids.device())?;
        let flat = ids.flatten_all()?;
        let d = self.config.hidden_size;
        let words = self.word.index_select(&flat, 0)?;
        let pos = self.position.index_select(&positions, 0)?;
        let tt = self.token_type.narrow(0, 0, 1)?;
        let e = (words + pos)?.broadcast_add(&tt)?.reshape((b, l, d))?;
        ctx.dropout(&self.emb_norm.forward(&e)?, self.config.hidden_dropout_prob)
    }

    fn is_roberta(&self) -> bool {
        self.config.is_roberta()
    }

    /// Runs the transformer layers over embedded input.
    pub fn encode(&self, h: &Tensor, mask: &Tensor, ctx: &mut Ctx) -> Result<Tensor> {
        let (b, l, d) = h.dims3()?;
        let heads = self.config.num_attention_heads;
        let dh = d / heads;
        let key_mask = mask.to_dtype(h.dtype())?.reshape((b, 1, 1, l))?;
        let scale = 1.0 / (dh as f64).sqrt();
        let split = |x: Tensor| -> Result<Tensor> { Ok(x.reshape((b, l, heads, dh))?.transpose(1, 2)?.contiguous()?) };
        let mut h = h.clone();
        for layer in &self.layers {
            let q = split(layer.query.forward(&h)?)?;
            let k = split(layer.key.forward(&h)?)?;
            let v = split(layer.value.forward(&h)?)?;
            let scores = (q.matmul(&k.t()?.contiguous()?)? * scale)?;
            let probs = masked_softmax(&scores, &key_mask)?;
            let probs = ctx.dropout(&probs, self.config.attention_probs_dropout_prob)?;
            let attended = probs.matmul(&v)?.transpose(1, 2)?.contiguous()?.reshape((b, l, d))?;
            let attended = ctx.dropout(&layer.attn_out.forward(&attended)?, self.config.hidden_dropout_prob)?;
            h = layer.attn_norm.forward(&(attended + &h)?)?;
            let inter = layer.intermediate.forward(&h)?;
            let inter = match self.config.hidden_act.as_str() {
                "gelu_new" => inter.gelu()?,
                "relu" => inter.relu()?,
                _ => inter.gelu_erf()?,
            };
            let out = ctx.dropout(&layer.output.forward(&inter)?, self.config.hidden_dropout_prob)?;
            h = layer.out_norm.forward(&(out + &h)?)?;
        }
        Ok(h)
    }
}

/// Lexicon fusion settings for a [`TransformerClassifier`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionSpec {
    pub lexicon_dim: usize,
    pub projection_dim: usize,
    pub mag: MagParams,
}

#[derive(Debug, Clone)]
pub struct TransformerClassifier {
    pub encoder: Encoder,
    pub fusion: Option<(Projection, Mag)>,
    head_dense: Linear,
    head_out: Linear,
    dropout: f64,
}

impl TransformerClassifier {
    pub fn new(store: &mut ParamStore, config: EncoderConfig, classes: usize, fusion: Option<FusionSpec>) -> Result<Self> {
        let d = config.hidden_size;
        let std = config.initializer_range;
        let dropout = config.hidden_dropout_prob;
        let encoder = Encoder::new(store, config)?;
        let fusion = match fusion {
            None => None,
            Some(f) => Some((
                Projection::new(store, "fusion.projection", f.lexicon_dim, f.projection_dim)?,
                Mag::new(store, "fusion.mag", d, f.projection_dim, f.mag)?,
            )),
        };
        Ok(TransformerClassifier {
            encoder,
            fusion,
            head_dense: Linear::normal(store, "classifier.dense", d, d, std)?,
            head_out: Linear::normal(store, "classifier.out_proj", d, classes, std)?,
            dropout,
        })
    }

    /// Class scores for `ids: [batch, len]`. Fusion models need
    /// `features: [batch, lexicon_dim]`.
    pub fn forward(&self, ids: &Tensor, mask: &Tensor, features: Option<&Tensor>, ctx: &mut Ctx) -> Result<Tensor> {
        let mut h = self.encoder.embed(ids, mask, ctx)?;
        if let Some((proj, mag)) = &self.fusion {
            let f = features.ok_or_else(|| Error::InvalidInput("fusion model called without lexicon features".into()))?;
            h = mag.forward(&h, &proj.forward(f)?, ctx)?;
        }
        let h = self.encoder.encode(&h, mask, ctx)?;
        let first = h.narrow(1, 0, 1)?.squeeze(1)?;
        let x = ctx.dropout(&first, self.dropout)?;
        let x = self.head_dense.forward(&x)?.tanh()?;
        let x = ctx.dropout(&x, self.dropout)?;
        self.head_out.forward(&x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::check_gradients;
    use candle_core::{Device, Var};

    fn tiny(fusion: bool, seed: u64) -> (ParamStore, TransformerClassifier) {
        let mut store = ParamStore::new(DType::F64, seed);
        let mut cfg = EncoderConfig::scratch(11, 8, 1, 2, 6, 0.0);
        cfg.initializer_range = 0.5;
        let spec = fusion.then_some(FusionSpec {
            lexicon_dim: 3,
            projection_dim: 4,
            mag: MagParams { beta: 1.0, epsilon: 1e-6, dropout: 0.0 },
        });
        let m = TransformerClassifier::new(&mut store, cfg, 2, spec).unwrap();
        (store, m)
    }

    fn batch() -> (Tensor, Tensor, Tensor) {
        let dev = Device::Cpu;
        let ids = Tensor::new(&[[2u32, 5, 7], [2, 9, 0]], &dev).unwrap();
        let mask = Tensor::new(&[[1.0f64, 1.0, 1.0], [1.0, 1.0, 0.0]], &dev).unwrap();
        let f = Tensor::new(&[[0.2f64, 0.0, 0.5], [0.1, 0.3, 0.0]], &dev).unwrap();
        (ids, mask, f)
    }

    #[test]
    fn padding_is_masked() {
        let (_, m) = tiny(true, 1);
        let (ids, mask, f) = batch();
        let full = m.forward(&ids, &mask, Some(&f), &mut Ctx::eval()).unwrap().to_vec2::<f64>().unwrap();
        let other_pad = Tensor::new(&[[2u32, 5, 7], [2, 9, 4]], &Device::Cpu).unwrap();
        let again = m.forward(&other_pad, &mask, Some(&f), &mut Ctx::eval()).unwrap().to_vec2::<f64>().unwrap();
        assert_eq!(full, again);
        let short = m
            .forward(&ids.narrow(0, 1, 1).unwrap().narrow(1, 0, 2).unwrap(), &mask.narrow(0, 1, 1).unwrap().narrow(1, 0, 2).unwrap(), Some(&f.narrow(0, 1, 1).unwrap()), &mut Ctx::eval())
            .unwrap()
            .to_vec2::<f64>()
            .unwrap();
        for (a, b) in short[0].iter().zip(&full[1]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn fusion_needs_features() {
        let (_, m) = tiny(true, 1);
        let (ids, mask, _) = batch();
        assert!(m.forward(&ids, &mask, None, &mut Ctx::eval()).is_err());
    }

    #[test]
    fn fused_classifier_gradients_match_finite_differences() {
        let (store, m) = tiny(true, 3);
        let (ids, mask, f) = batch();
        let f = Var::from_tensor(&f).unwrap();
        let y = Tensor::new(&[1u32, 0], &Device::Cpu).unwrap();
        let report = check_gradients(&store, &[f.clone()], || {
            crate::nn::cross_entropy(&m.forward(&ids, &mask, Some(&f), &mut Ctx::eval())?, &y, None)
        })
        .unwrap();
        assert!(report.max_rel_error < 1e-4, "{report:?}");
    }

    #[test]
    fn pretrained_names_are_normalized() {
        let cfg = EncoderConfig::scratch(4, 2, 1, 1, 4, 0.0);
        let t = Tensor::zeros(2, DType::F32, &Device::Cpu).unwrap();
        let m = std::collections::HashMap::from([
            ("embeddings.LayerNorm.gamma".to_string(), t.clone()),
            ("roberta.encoder.layer.0.output.dense.bias".to_string(), t),
        ]);
        let mut keys: Vec<String> = normalize_pretrained_names(m, &cfg).into_keys().collect();
        keys.sort();
        assert_eq!(keys, ["bert.embeddings.LayerNorm.weight", "bert.encoder.layer.0.output.dense.bias"]);
    }

    #[test]
    fn reads_hub_config() {
        let json = r#"{"architectures":["RobertaForMaskedLM"],"model_type":"roberta","vocab_size":64001,"hidden_size":768,
            "num_hidden_layers":12,"num_attention_heads":12,"intermediate_size":3072,"hidden_act":"gelu",
            "max_position_embeddings":130,"type_vocab_size":1,"layer_norm_eps":1e-05,"pad_token_id":1,"bos_token_id":0,"eos_token_id":2}"#;
        let cfg: EncoderConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.max_tokens(), 128);
        cfg.validate().unwrap();
    }
}
