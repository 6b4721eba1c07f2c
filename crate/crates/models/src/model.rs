//! Training, prediction and checkpoints for every architecture.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use braglab_core::evaluation::{
    confusion_counts, macro_prf, per_class_prf, stratified_subsample, validate_fractions, CurvePoint, EvalReport,
};
use braglab_core::featurizers::Featurizer;
use braglab_core::Task;
use candle_core::{DType, Tensor};
use candle_nn::optim::{AdamW, Optimizer, ParamsAdamW};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bigru::BiGruAtt;
use crate::config::{Arch, ModelConfig};
use crate::data::{class_counts, class_indices, class_weights, Dataset, Example};
use crate::encoder::{normalize_pretrained_names, resolve_encoder, EncoderConfig, FusionSpec, TransformerClassifier};
use crate::lr::{LogisticRegression, LrOptions};
use crate::mag::MagParams;
use crate::nn::{cross_entropy, load_safetensors, softmax, Ctx, Init, ParamStore};
use crate::text::{load_word_vectors, make_batch, InputEncoder, Vocabulary};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_loss: f64,
    pub dev_macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: usize,
    pub probabilities: Vec<f64>,
}

/// Serialisable description of everything besides tensors that is needed
/// to rebuild a model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum State {
    Majority { class: usize, counts: Vec<usize> },
    LrBow { vocab: Vocabulary, iterations: usize },
    Bigru { vocab: Vocabulary },
    Transformer { encoder: EncoderConfig, vocab: Option<Vocabulary>, lexicon_dim: Option<usize> },
}

enum Net {
    Bigru { embeddings: Tensor, net: BiGruAtt },
    Transformer(TransformerClassifier),
}

struct Neural {
    store: ParamStore,
    net: Net,
    input: InputEncoder,
    featurizer: Option<Featurizer>,
}

enum Kind {
    Majority { class: usize, counts: Vec<usize> },
    LrBow(LogisticRegression),
    Neural(Box<Neural>),
}

/// A trained classifier for one seed. Immutable once built; prediction
/// takes `&self` and can run from several threads.
pub struct TrainedModel {
    pub config: ModelConfig,
    pub seed: u64,
    pub labels: Vec<String>,
    pub training_log: Vec<EpochLog>,
    state: State,
    kind: Kind,
}

const CONFIG_FILE: &str = "config.json";
const LABELS_FILE: &str = "labels.json";
const STATE_FILE: &str = "state.json";
const PARAMS_FILE: &str = "model.safetensors";
const LOG_FILE: &str = "training_log.json";
const TOKENIZER_FILE: &str = "tokenizer.json";

fn load_featurizer(config: &ModelConfig) -> Result<Option<Featurizer>> {
    Ok(match config.fusion_lexicon {
        None => None,
        Some(kind) => Some(Featurizer::load(kind, config.fusion_resource.as_deref())?),
    })
}

fn neural_net(
    config: &ModelConfig,
    store: &mut ParamStore,
    state: &State,
    classes: usize,
    init_embeddings: Option<Tensor>,
) -> Result<Net> {
    match state {
        State::Bigru { vocab } => {
            let dim = config.embedding_dim;
            let embeddings = match init_embeddings {
                Some(t) => store.frozen("embeddings.weight", t)?,
                None => store.frozen("embeddings.weight", Tensor::zeros((vocab.len(), dim), store.dtype(), store.device())?)?,
            };
            let net = BiGruAtt::new(store, dim, config.hidden_size, classes, config.dropout)?;
            Ok(Net::Bigru { embeddings, net })
        }
        State::Transformer { encoder, lexicon_dim, .. } => {
            let fusion = match (config.arch, lexicon_dim) {
                (Arch::TransformerMag, Some(d)) => Some(FusionSpec {
                    lexicon_dim: *d,
                    projection_dim: config.projection_dim,
                    mag: MagParams {
                        beta: config.beta_shift,
                        epsilon: config.epsilon,
                        dropout: config.dropout,
                    },
                }),
                _ => None,
            };
            Ok(Net::Transformer(TransformerClassifier::new(store, encoder.clone(), classes, fusion)?))
        }
        _ => unreachable!("not a neural state"),
    }
}

impl Neural {
    fn encode(&self, examples: &[&[String]], max_len: usize) -> Result<(Vec<Vec<u32>>, Option<Vec<Vec<f64>>>)> {
        let ids = examples.iter().map(|t| self.input.encode(t, max_len)).collect::<Result<Vec<_>>>()?;
        let feats = self.featurizer.as_ref().map(|f| examples.iter().map(|t| f.vector(t)).collect());
        Ok((ids, feats))
    }

    fn logits(&self, ids: &[&[u32]], feats: Option<&[&[f64]]>, targets: Option<&[u32]>, max_len: usize, ctx: &mut Ctx) -> Result<(Tensor, Option<Tensor>)> {
        let batch = make_batch(ids, max_len, self.input.pad_id(), feats, targets, self.store.dtype())?;
        let logits = match &self.net {
            Net::Bigru { embeddings, net } => {
                let (b, l) = batch.ids.dims2()?;
                let x = embeddings.index_select(&batch.ids.flatten_all()?, 0)?.reshape((b, l, embeddings.dims()[1]))?;
                net.forward(&x, &batch.mask, ctx)?.logits
            }
            Net::Transformer(t) => t.forward(&batch.ids, &batch.mask, batch.features.as_ref(), ctx)?,
        };
        Ok((logits, batch.targets))
    }

    /// Class probabilities and, given targets, the weighted mean loss.
    fn score(
        &self,
        ids: &[Vec<u32>],
        feats: Option<&[Vec<f64>]>,
        targets: Option<&[u32]>,
        weights: Option<&Tensor>,
        config: &ModelConfig,
    ) -> Result<(Vec<Vec<f64>>, Option<f64>)> {
        let mut probs = Vec::with_capacity(ids.len());
        let (mut loss_sum, mut weight_sum) = (0.0, 0.0);
        let mut ctx = Ctx::eval();
        for start in (0..ids.len()).step_by(config.batch_size) {
            let end = (start + config.batch_size).min(ids.len());
            let id_rows: Vec<&[u32]> = ids[start..end].iter().map(Vec::as_slice).collect();
            let feat_rows: Option<Vec<&[f64]>> = feats.map(|f| f[start..end].iter().map(Vec::as_slice).collect());
            let t = targets.map(|t| &t[start..end]);
            let (logits, tt) = self.logits(&id_rows, feat_rows.as_deref(), t, config.max_seq_len, &mut ctx)?;
            if let Some(tt) = tt {
                let w = match weights {
                    Some(w) => w.index_select(&tt, 0)?.to_dtype(DType::F64)?.sum_all()?.to_scalar::<f64>()?,
                    None => (end - start) as f64,
                };
                let l = cross_entropy(&logits, &tt, weights)?.to_dtype(DType::F64)?.to_scalar::<f64>()?;
                loss_sum += l * w;
                weight_sum += w;
            }
            probs.extend(softmax(&logits.to_dtype(DType::F64)?)?.to_vec2::<f64>()?);
        }
        let loss = targets.map(|_| if weight_sum > 0.0 { loss_sum / weight_sum } else { 0.0 });
        Ok((probs, loss))
    }
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = i;
        }
    }
    best
}

fn check_nonempty(name: &str, examples: &[Example]) -> Result<()> {
    if examples.is_empty() {
        return Err(Error::InvalidInput(format!("the {name} partition is empty")));
    }
    Ok(())
}

/// Trains one model per configured seed.
pub fn train(config: &ModelConfig, data: &Dataset) -> Result<Vec<TrainedModel>> {
    config.validate()?;
    config.seeds.iter().map(|&s| train_seed(config, &data.train, &data.dev, s)).collect()
}

/// Trains one model with one seed, early-stopping on `dev` loss for neural
/// architectures.
pub fn train_seed(config: &ModelConfig, train: &[Example], dev: &[Example], seed: u64) -> Result<TrainedModel> {
    config.validate()?;
    check_nonempty("training", train)?;
    let task = config.task;
    let labels = task.class_names();
    let y: Vec<usize> = class_indices(task, train);
    let counts = class_counts(task, train);
    match config.arch {
        Arch::Majority => {
            let best = (0..labels.len())
                .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(labels[b].cmp(&labels[a])))
                .unwrap();
            Ok(TrainedModel {
                config: config.clone(),
                seed,
                labels,
                training_log: Vec::new(),
                state: State::Majority { class: best, counts: counts.clone() },
                kind: Kind::Majority { class: best, counts },
            })
        }
        Arch::LrBow => {
            let opts = LrOptions {
                l2: config.l2_strength,
                max_iter: config.lbfgs_max_iter,
                class_weights: config.class_weighting.then(|| class_weights(&counts)),
            };
            let docs: Vec<Vec<String>> = train.iter().map(|e| e.tokens.clone()).collect();
            let lr = LogisticRegression::fit(&docs, &y, task.num_classes(), &opts)?;
            let mut model = TrainedModel {
                config: config.clone(),
                seed,
                labels,
                training_log: Vec::new(),
                state: State::LrBow { vocab: lr.vocab.clone(), iterations: lr.iterations },
                kind: Kind::LrBow(lr),
            };
            if !dev.is_empty() {
                let gold = class_indices(task, dev);
                let preds = model.predict_examples(dev)?;
                let w = config.class_weighting.then(|| class_weights(&counts));
                let loss = preds
                    .iter()
                    .zip(&gold)
                    .map(|(p, &g)| -p.probabilities[g].max(f64::MIN_POSITIVE).ln() * w.as_ref().map_or(1.0, |w| w[g]))
                    .sum::<f64>()
                    / gold.iter().map(|&g| w.as_ref().map_or(1.0, |w| w[g])).sum::<f64>();
                let train_preds = model.predict_examples(train)?;
                let train_loss = train_preds
                    .iter()
                    .zip(&y)
                    .map(|(p, &g)| -p.probabilities[g].max(f64::MIN_POSITIVE).ln() * w.as_ref().map_or(1.0, |w| w[g]))
                    .sum::<f64>()
                    / y.iter().map(|&g| w.as_ref().map_or(1.0, |w| w[g])).sum::<f64>();
                let pl: Vec<usize> = preds.iter().map(|p| p.label).collect();
                let all: Vec<usize> = (0..task.num_classes()).collect();
                model.training_log.push(EpochLog {
                    epoch: 1,
                    train_loss,
                    dev_loss: loss,
                    dev_macro_f1: macro_prf(&pl, &gold, &all)?.f1,
                });
            }
            Ok(model)
        }
        _ => train_neural(config, train, dev, seed, &counts),
    }
}

fn train_neural(config: &ModelConfig, train: &[Example], dev: &[Example], seed: u64, counts: &[usize]) -> Result<TrainedModel> {
    check_nonempty("dev", dev)?;
    let task = config.task;
    let classes = task.num_classes();
    let featurizer = load_featurizer(config)?;
    let dtype = DType::F32;
    let docs: Vec<&[String]> = train.iter().map(|e| e.tokens.as_slice()).collect();

    let mut pretrained = false;
    let (state, input, preset, init_embeddings) = match config.arch {
        Arch::BigruAtt => {
            let vocab = Vocabulary::build(docs.iter().copied(), 1);
            let dim = config.embedding_dim;
            let matrix = match &config.embeddings_path {
                Some(p) => {
                    let (m, found) = load_word_vectors(p, &vocab, dim)?;
                    log::info!("word vectors cover {found} of {} vocabulary entries", vocab.len() - 4);
                    m
                }
                None => {
                    log::warn!("no word-vector file given; using seeded random frozen embeddings");
                    let mut s = ParamStore::new(DType::F64, seed ^ 0x5eed);
                    let mut m = s.get("e", &[vocab.len(), dim], Init::Normal(0.1))?.flatten_all()?.to_vec1::<f64>()?;
                    m[..4 * dim].iter_mut().for_each(|v| *v = 0.0);
                    m
                }
            };
            let emb = Tensor::from_vec(matrix, (vocab.len(), dim), &candle_core::Device::Cpu)?;
            (State::Bigru { vocab: vocab.clone() }, InputEncoder::words(vocab, false), HashMap::new(), Some(emb))
        }
        _ if config.uses_scratch_encoder() => {
            let vocab = Vocabulary::build(docs.iter().copied(), 1);
            let enc = EncoderConfig::scratch(
                vocab.len(),
                config.hidden_size,
                config.encoder_layers,
                config.encoder_heads,
                config.max_seq_len,
                config.dropout,
            );
            let state = State::Transformer {
                encoder: enc,
                vocab: Some(vocab.clone()),
                lexicon_dim: featurizer.as_ref().map(|f| f.dim()),
            };
            (state, InputEncoder::words(vocab, true), HashMap::new(), None)
        }
        _ => {
            let dir = resolve_encoder(&config.encoder_name)?;
            let enc = EncoderConfig::load(&dir.join("config.json"))?;
            if config.max_seq_len > enc.max_tokens() {
                return Err(Error::Config(format!(
                    "max_seq_len {} exceeds the encoder's {} positions",
                    config.max_seq_len,
                    enc.max_tokens()
                )));
            }
            let input = InputEncoder::pretrained(&dir.join(TOKENIZER_FILE), enc.pad_token_id)?;
            pretrained = true;
            let preset = normalize_pretrained_names(load_safetensors(&dir.join("model.safetensors"))?, &enc);
            let state = State::Transformer {
                encoder: enc,
                vocab: None,
                lexicon_dim: featurizer.as_ref().map(|f| f.dim()),
            };
            (state, input, preset, None)
        }
    };

    let mut store = ParamStore::new(dtype, seed).with_preset(preset);
    let net = neural_net(config, &mut store, &state, classes, init_embeddings)?;
    if pretrained {
        let unused = store.unused_preset();
        if !unused.is_empty() {
            log::debug!("pretrained tensors not used by the classifier: {unused:?}");
        }
    }
    let neural = Neural {
        store,
        net,
        input,
        featurizer,
    };

    let max_len = config.max_seq_len;
    let train_tokens: Vec<&[String]> = train.iter().map(|e| e.tokens.as_slice()).collect();
    let dev_tokens: Vec<&[String]> = dev.iter().map(|e| e.tokens.as_slice()).collect();
    let (train_ids, train_feats) = neural.encode(&train_tokens, max_len)?;
    let (dev_ids, dev_feats) = neural.encode(&dev_tokens, max_len)?;
    let train_y: Vec<u32> = class_indices(task, train).into_iter().map(|c| c as u32).collect();
    let dev_y: Vec<u32> = class_indices(task, dev).into_iter().map(|c| c as u32).collect();
    let weights = if config.class_weighting {
        Some(Tensor::new(class_weights(counts).as_slice(), &candle_core::Device::Cpu)?.to_dtype(dtype)?)
    } else {
        None
    };

    let mut opt = AdamW::new(
        neural.store.trainable(),
        ParamsAdamW {
            lr: config.learning_rate,
            weight_decay: 0.0,
            ..ParamsAdamW::default()
        },
    )?;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut ctx = Ctx::train(seed.wrapping_add(2));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log_rows = Vec::new();
    let mut best: Option<(f64, BTreeMap<String, Tensor>)> = None;
    let mut since_best = 0;
    let all: Vec<usize> = (0..classes).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let (mut loss_sum, mut batches) = (0.0, 0usize);
        for (bi, chunk) in order.chunks(config.batch_size).enumerate() {
            let ids: Vec<&[u32]> = chunk.iter().map(|&i| train_ids[i].as_slice()).collect();
            let feats: Option<Vec<&[f64]>> = train_feats.as_ref().map(|f| chunk.iter().map(|&i| f[i].as_slice()).collect());
            let y: Vec<u32> = chunk.iter().map(|&i| train_y[i]).collect();
            let (logits, targets) = neural.logits(&ids, feats.as_deref(), Some(&y), max_len, &mut ctx)?;
            let loss = cross_entropy(&logits, targets.as_ref().unwrap(), weights.as_ref())?;
            let value = loss.to_dtype(DType::F64)?.to_scalar::<f64>()?;
            if !value.is_finite() {
                return Err(Error::NonFiniteLoss {
                    seed,
                    epoch,
                    batch: bi,
                    loss: value,
                });
            }
            opt.backward_step(&loss)?;
            loss_sum += value;
            batches += 1;
        }
        let (probs, dev_loss) = neural.score(&dev_ids, dev_feats.as_deref(), Some(&dev_y), weights.as_ref(), config)?;
        let dev_loss = dev_loss.unwrap_or(f64::NAN);
        let preds: Vec<usize> = probs.iter().map(|p| argmax(p)).collect();
        let gold: Vec<usize> = dev_y.iter().map(|&v| v as usize).collect();
        let f1 = macro_prf(&preds, &gold, &all)?.f1;
        log::info!("seed {seed} epoch {epoch}: train loss {:.4}, dev loss {dev_loss:.4}, dev macro-F1 {f1:.2}", loss_sum / batches as f64);
        log_rows.push(EpochLog {
            epoch,
            train_loss: loss_sum / batches as f64,
            dev_loss,
            dev_macro_f1: f1,
        });
        match &best {
            Some((b, _)) if dev_loss >= *b => {
                since_best += 1;
                if since_best >= config.patience {
                    log::info!("early stop after epoch {epoch}");
                    break;
                }
            }
            _ => {
                best = Some((dev_loss, neural.store.snapshot()?));
                since_best = 0;
            }
        }
    }
    if let Some((_, snap)) = &best {
        neural.store.restore(snap)?;
    }
    Ok(TrainedModel {
        config: config.clone(),
        seed,
        labels: task.class_names(),
        training_log: log_rows,
        state,
        kind: Kind::Neural(Box::new(neural)),
    })
}

impl TrainedModel {
    pub fn task(&self) -> Task {
        self.config.task
    }

    /// Errors unless the model's labels equal `expected`, in order.
    pub fn check_labels(&self, expected: &[String]) -> Result<()> {
        if self.labels != expected {
            return Err(Error::LabelMismatch {
                model: self.labels.clone(),
                expected: expected.to_vec(),
            });
        }
        Ok(())
    }

    pub fn predict_examples(&self, examples: &[Example]) -> Result<Vec<Prediction>> {
        let tokens: Vec<&[String]> = examples.iter().map(|e| e.tokens.as_slice()).collect();
        self.predict(&tokens)
    }

    /// Most probable class and the class distribution for each post.
    pub fn predict(&self, posts: &[&[String]]) -> Result<Vec<Prediction>> {
        let probs: Vec<Vec<f64>> = match &self.kind {
            Kind::Majority { class, .. } => {
                let k = self.labels.len();
                posts.iter().map(|_| (0..k).map(|c| if c == *class { 1.0 } else { 0.0 }).collect()).collect()
            }
            Kind::LrBow(lr) => posts.iter().map(|t| lr.predict_proba(t)).collect(),
            Kind::Neural(n) => {
                let (ids, feats) = n.encode(posts, self.config.max_seq_len)?;
                n.score(&ids, feats.as_deref(), None, None, &self.config)?.0
            }
        };
        Ok(probs
            .into_iter()
            .map(|p| Prediction {
                label: argmax(&p),
                probabilities: p,
            })
            .collect())
    }

    pub fn num_parameters(&self) -> usize {
        match &self.kind {
            Kind::Majority { .. } => 0,
            Kind::LrBow(lr) => lr.weights.len() + lr.bias.len(),
            Kind::Neural(n) => n.store.num_trainable(),
        }
    }

    /// Writes the checkpoint directory: configuration, label order,
    /// rebuild state, parameters and training log.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(CONFIG_FILE), serde_json::to_string_pretty(&self.config)?)?;
        std::fs::write(dir.join(LABELS_FILE), serde_json::to_string_pretty(&self.labels)?)?;
        let state = serde_json::json!({ "seed": self.seed, "state": self.state });
        std::fs::write(dir.join(STATE_FILE), serde_json::to_string_pretty(&state)?)?;
        std::fs::write(dir.join(LOG_FILE), serde_json::to_string_pretty(&self.training_log)?)?;
        let dev = candle_core::Device::Cpu;
        match &self.kind {
            Kind::Majority { counts, .. } => {
                let c: Vec<u32> = counts.iter().map(|&c| c as u32).collect();
                let t = Tensor::new(c.as_slice(), &dev)?;
                candle_core::safetensors::save(&HashMap::from([("majority.counts".to_string(), t)]), dir.join(PARAMS_FILE))?;
            }
            Kind::LrBow(lr) => {
                let w = Tensor::from_vec(lr.weights.clone(), (lr.classes, lr.vocab.len()), &dev)?;
                let b = Tensor::new(lr.bias.as_slice(), &dev)?;
                let map = HashMap::from([("lr.weight".to_string(), w), ("lr.bias".to_string(), b)]);
                candle_core::safetensors::save(&map, dir.join(PARAMS_FILE))?;
            }
            Kind::Neural(n) => {
                n.store.save(&dir.join(PARAMS_FILE))?;
                if let InputEncoder::Pretrained { tokenizer, .. } = &n.input {
                    tokenizer
                        .save(dir.join(TOKENIZER_FILE), false)
                        .map_err(|e| Error::Tokenizer(e.to_string()))?;
                }
            }
        }
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let bad = |m: String| Error::Checkpoint {
            path: dir.to_path_buf(),
            message: m,
        };
        let read = |f: &str| std::fs::read_to_string(dir.join(f)).map_err(|e| bad(format!("{f}: {e}")));
        let config: ModelConfig = serde_json::from_str(&read(CONFIG_FILE)?)?;
        let labels: Vec<String> = serde_json::from_str(&read(LABELS_FILE)?)?;
        let training_log: Vec<EpochLog> = serde_json::from_str(&read(LOG_FILE)?)?;
        #[derive(Deserialize)]
        struct Saved {
            seed: u64,
            state: State,
        }
        let Saved { seed, state } = serde_json::from_str(&read(STATE_FILE)?)?;
        if labels != config.task.class_names() {
            return Err(Error::LabelMismatch {
                model: labels,
                expected: config.task.class_names(),
            });
        }
        let tensors = load_safetensors(&dir.join(PARAMS_FILE))?;
        let kind = match &state {
            State::Majority { class, counts } => Kind::Majority {
                class: *class,
                counts: counts.clone(),
            },
            State::LrBow { vocab, iterations } => {
                let get = |k: &str| -> Result<Vec<f64>> {
                    Ok(tensors.get(k).ok_or_else(|| bad(format!("missing tensor {k}")))?.flatten_all()?.to_vec1::<f64>()?)
                };
                Kind::LrBow(LogisticRegression {
                    vocab: vocab.clone(),
                    classes: labels.len(),
                    weights: get("lr.weight")?,
                    bias: get("lr.bias")?,
                    iterations: *iterations,
                })
            }
            State::Bigru { vocab } | State::Transformer { vocab: Some(vocab), .. } => {
                let specials = matches!(state, State::Transformer { .. });
                let mut store = ParamStore::new(DType::F32, seed).with_preset(tensors);
                let net = neural_net(&config, &mut store, &state, labels.len(), None)?;
                if !store.unused_preset().is_empty() {
                    return Err(bad(format!("unexpected tensors {:?}", store.unused_preset())));
                }
                Kind::Neural(Box::new(Neural {
                    store,
                    net,
                    input: InputEncoder::words(vocab.clone(), specials),
                    featurizer: load_featurizer(&config)?,
                }))
            }
            State::Transformer { encoder, vocab: None, .. } => {
                let mut store = ParamStore::new(DType::F32, seed).with_preset(tensors);
                let net = neural_net(&config, &mut store, &state, labels.len(), None)?;
                Kind::Neural(Box::new(Neural {
                    store,
                    net,
                    input: InputEncoder::pretrained(&dir.join(TOKENIZER_FILE), encoder.pad_token_id)?,
                    featurizer: load_featurizer(&config)?,
                }))
            }
        };
        Ok(TrainedModel {
            config,
            seed,
            labels,
            training_log,
            state,
            kind,
        })
    }
}

/// Metrics of a set of per-seed models on `examples`.
pub fn evaluate(models: &[TrainedModel], examples: &[Example]) -> Result<EvalReport> {
    let first = models.first().ok_or_else(|| Error::InvalidInput("no models to evaluate".into()))?;
    let task = first.task();
    let gold = class_indices(task, examples);
    let mut per_seed = Vec::with_capacity(models.len());
    for m in models {
        m.check_labels(&first.labels)?;
        per_seed.push(m.predict_examples(examples)?.into_iter().map(|p| p.label).collect());
    }
    Ok(EvalReport::from_predictions(task, &per_seed, &gold)?)
}

/// Metrics restricted to the examples whose ids are in `ids`.
pub fn evaluate_subset(models: &[TrainedModel], examples: &[Example], ids: &[String]) -> Result<EvalReport> {
    if ids.is_empty() {
        return Err(Error::InvalidInput("empty evaluation subset".into()));
    }
    let pos: HashMap<&str, usize> = examples.iter().enumerate().map(|(i, e)| (e.id.as_str(), i)).collect();
    let mut subset = Vec::with_capacity(ids.len());
    for id in ids {
        subset.push(*pos.get(id.as_str()).ok_or_else(|| {
            Error::InvalidInput(format!("post `{id}` is not in the evaluation set"))
        })?);
    }
    subset.sort_unstable();
    subset.dedup();
    let picked: Vec<Example> = subset.iter().map(|&i| examples[i].clone()).collect();
    evaluate(models, &picked)
}

/// Trains on seeded stratified subsamples of the training set, one per
/// fraction, and reports per-class F1 on the full test set. Classes with no
/// training example at a fraction are skipped with a warning.
pub fn learning_curve(config: &ModelConfig, data: &Dataset, fractions: &[f64], seed: u64) -> Result<Vec<CurvePoint>> {
    validate_fractions(fractions)?;
    config.validate()?;
    check_nonempty("test", &data.test)?;
    let task = config.task;
    let names = task.class_names();
    let all: Vec<usize> = (0..names.len()).collect();
    let train_y = class_indices(task, &data.train);
    let gold = class_indices(task, &data.test);
    let mut points = Vec::with_capacity(fractions.len());
    for &fraction in fractions {
        let keep = stratified_subsample(&train_y, fraction, seed);
        let subset: Vec<Example> = keep.iter().map(|&i| data.train[i].clone()).collect();
        let counts = class_counts(task, &subset);
        let skipped: Vec<String> = all.iter().filter(|&&c| counts[c] == 0).map(|&c| names[c].clone()).collect();
        if !skipped.is_empty() {
            log::warn!("fraction {fraction}: no training examples for {}", skipped.join(", "));
        }
        let model = train_seed(config, &subset, &data.dev, seed)?;
        let preds: Vec<usize> = model.predict_examples(&data.test)?.into_iter().map(|p| p.label).collect();
        let per = per_class_prf(&confusion_counts(&preds, &gold, &all)?);
        let per_class_f1: BTreeMap<String, f64> = all
            .iter()
            .filter(|&&c| counts[c] > 0)
            .map(|&c| (names[c].clone(), 100.0 * per[c].f1))
            .collect();
        points.push(CurvePoint {
            train_fraction: fraction,
            train_size: subset.len(),
            macro_f1: macro_prf(&preds, &gold, &all)?.f1,
            per_class_f1,
            skipped_classes: skipped,
        });
    }
    Ok(points)
}
