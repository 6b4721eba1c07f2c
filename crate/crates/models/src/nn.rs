//! Parameter storage and the small set of differentiable building blocks
//! the classifiers share. Everything is written with plain tensor ops so
//! that it runs in both f32 (training) and f64 (gradient checks).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use candle_core::{DType, Device, Tensor, Var, D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub enum Init {
    Zeros,
    Ones,
    Normal(f64),
    Uniform(f64),
}

/// Named trainable tensors with seeded initialisation.
///
/// Tensors supplied up front (pretrained weights or a checkpoint) take
/// precedence over initialisation when their shape matches.
pub struct ParamStore {
    vars: BTreeMap<String, Var>,
    frozen: BTreeSet<String>,
    preset: HashMap<String, Tensor>,
    dtype: DType,
    device: Device,
    rng: ChaCha8Rng,
}

impl ParamStore {
    pub fn new(dtype: DType, seed: u64) -> Self {
        ParamStore {
            vars: BTreeMap::new(),
            frozen: BTreeSet::new(),
            preset: HashMap::new(),
            dtype,
            device: Device::Cpu,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn with_preset(mut self, preset: HashMap<String, Tensor>) -> Self {
        self.preset = preset;
        self
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn get(&mut self, name: &str, shape: &[usize], init: Init) -> Result<Tensor> {
        if let Some(v) = self.vars.get(name) {
            if v.dims() != shape {
                return Err(Error::Config(format!("parameter `{name}` reused with shape {shape:?}, has {:?}", v.dims())));
            }
            return Ok(v.as_tensor().clone());
        }
        let tensor = match self.preset.remove(name) {
            Some(t) if t.dims() == shape => t.to_dtype(self.dtype)?,
            Some(t) => {
                return Err(Error::Config(format!(
                    "pretrained `{name}` has shape {:?}, model expects {shape:?}",
                    t.dims()
                )))
            }
            None => self.init(shape, init)?,
        };
        let var = Var::from_tensor(&tensor)?;
        let t = var.as_tensor().clone();
        self.vars.insert(name.to_string(), var);
        Ok(t)
    }

    /// Inserts a fixed tensor that is stored but never trained.
    pub fn frozen(&mut self, name: &str, tensor: Tensor) -> Result<Tensor> {
        let tensor = match self.preset.remove(name) {
            Some(t) if t.dims() == tensor.dims() => t,
            _ => tensor,
        };
        let var = Var::from_tensor(&tensor.to_dtype(self.dtype)?)?;
        let t = var.as_tensor().clone();
        self.vars.insert(name.to_string(), var);
        self.frozen.insert(name.to_string());
        Ok(t)
    }

    fn init(&mut self, shape: &[usize], init: Init) -> Result<Tensor> {
        let n: usize = shape.iter().product();
        let data: Vec<f64> = match init {
            Init::Zeros => vec![0.0; n],
            Init::Ones => vec![1.0; n],
            Init::Normal(std) => {
                let d = Normal::new(0.0, std).map_err(|e| Error::Config(e.to_string()))?;
                (0..n).map(|_| d.sample(&mut self.rng)).collect()
            }
            Init::Uniform(b) => (0..n).map(|_| self.rng.random_range(-b..=b)).collect(),
        };
        Ok(Tensor::from_vec(data, shape, &self.device)?.to_dtype(self.dtype)?)
    }

    pub fn trainable(&self) -> Vec<Var> {
        self.vars
            .iter()
            .filter(|(k, _)| !self.frozen.contains(*k))
            .map(|(_, v)| v.clone())
            .collect()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.vars.keys().map(String::as_str)
    }

    pub fn var(&self, name: &str) -> Option<&Var> {
        self.vars.get(name)
    }

    pub fn num_trainable(&self) -> usize {
        self.trainable().iter().map(|v| v.elem_count()).sum()
    }

    /// Deep copy of every parameter.
    pub fn snapshot(&self) -> Result<BTreeMap<String, Tensor>> {
        self.vars.iter().map(|(k, v)| Ok((k.clone(), v.as_tensor().copy()?))).collect()
    }

    pub fn restore(&self, snapshot: &BTreeMap<String, Tensor>) -> Result<()> {
        for (k, v) in &self.vars {
            if let Some(t) = snapshot.get(k) {
                v.set(t)?;
            }
        }
        Ok(())
    }

    pub fn unused_preset(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.preset.keys().map(String::as_str).collect();
        v.sort_unstable();
        v
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let map: HashMap<String, Tensor> = self.vars.iter().map(|(k, v)| (k.clone(), v.as_tensor().clone())).collect();
        candle_core::safetensors::save(&map, path)?;
        Ok(())
    }
}

pub fn load_safetensors(path: &Path) -> Result<HashMap<String, Tensor>> {
    Ok(candle_core::safetensors::load(path, &Device::Cpu)?)
}

/// Forward-pass mode. Dropout masks come from a seeded generator so
/// training runs are reproducible.
pub struct Ctx {
    train: bool,
    rng: ChaCha8Rng,
}

impl Ctx {
    pub fn eval() -> Self {
        Ctx {
            train: false,
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }

    pub fn train(seed: u64) -> Self {
        Ctx {
            train: true,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn is_train(&self) -> bool {
        self.train
    }

    pub fn dropout(&mut self, x: &Tensor, p: f64) -> Result<Tensor> {
        if !self.train || p == 0.0 {
            return Ok(x.clone());
        }
        let keep = 1.0 - p;
        let mask: Vec<f64> = (0..x.elem_count())
            .map(|_| if self.rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
            .collect();
        let mask = Tensor::from_vec(mask, x.shape(), x.device())?.to_dtype(x.dtype())?;
        Ok(x.mul(&mask)?)
    }
}

/// Affine map with PyTorch's `[out, in]` weight layout.
#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: Tensor,
    pub bias: Option<Tensor>,
}

impl Linear {
    /// PyTorch default initialisation, uniform in ±1/sqrt(fan_in).
    pub fn new(store: &mut ParamStore, name: &str, fan_in: usize, fan_out: usize) -> Result<Self> {
        let b = 1.0 / (fan_in as f64).sqrt();
        Ok(Linear {
            weight: store.get(&format!("{name}.weight"), &[fan_out, fan_in], Init::Uniform(b))?,
            bias: Some(store.get(&format!("{name}.bias"), &[fan_out], Init::Uniform(b))?),
        })
    }

    /// Transformer-style initialisation: N(0, std) weights, zero bias.
    pub fn normal(store: &mut ParamStore, name: &str, fan_in: usize, fan_out: usize, std: f64) -> Result<Self> {
        Ok(Linear {
            weight: store.get(&format!("{name}.weight"), &[fan_out, fan_in], Init::Normal(std))?,
            bias: Some(store.get(&format!("{name}.bias"), &[fan_out], Init::Zeros)?),
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weight.dims()[1]
    }

    pub fn out_dim(&self) -> usize {
        self.weight.dims()[0]
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let last = *x.dims().last().ok_or_else(|| Error::InvalidInput("scalar input to linear layer".into()))?;
        if last != self.in_dim() {
            return Err(Error::InvalidInput(format!(
                "linear layer expects width {}, got {last}",
                self.in_dim()
            )));
        }
        let y = x.broadcast_matmul(&self.weight.t()?)?;
        Ok(match &self.bias {
            Some(b) => y.broadcast_add(b)?,
            None => y,
        })
    }
}

#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub weight: Tensor,
    pub bias: Tensor,
    pub eps: f64,
}

impl LayerNorm {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize, eps: f64) -> Result<Self> {
        Ok(LayerNorm {
            weight: store.get(&format!("{name}.weight"), &[dim], Init::Ones)?,
            bias: store.get(&format!("{name}.bias"), &[dim], Init::Zeros)?,
            eps,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        layer_norm(x, &self.weight, &self.bias, self.eps)
    }
}

pub fn layer_norm(x: &Tensor, weight: &Tensor, bias: &Tensor, eps: f64) -> Result<Tensor> {
    let mean = x.mean_keepdim(D::Minus1)?;
    let centered = x.broadcast_sub(&mean)?;
    let var = centered.sqr()?.mean_keepdim(D::Minus1)?;
    let normed = centered.broadcast_div(&(var + eps)?.sqrt()?)?;
    Ok(normed.broadcast_mul(weight)?.broadcast_add(bias)?)
}

pub fn sigmoid(x: &Tensor) -> Result<Tensor> {
    Ok((((x * 0.5)?.tanh()? + 1.0)? * 0.5)?)
}

/// Softmax over the last axis where `mask` is 0 marks positions that get
/// exactly zero weight. `mask` broadcasts against `scores`.
pub fn masked_softmax(scores: &Tensor, mask: &Tensor) -> Result<Tensor> {
    let penalty = ((mask.broadcast_as(scores.shape())? - 1.0)? * 1e9)?;
    let s = (scores + penalty)?;
    let max = s.max_keepdim(D::Minus1)?.detach();
    let e = s.broadcast_sub(&max)?.exp()?;
    Ok(e.broadcast_div(&e.sum_keepdim(D::Minus1)?)?)
}

pub fn softmax(x: &Tensor) -> Result<Tensor> {
    let max = x.max_keepdim(D::Minus1)?.detach();
    let e = x.broadcast_sub(&max)?.exp()?;
    Ok(e.broadcast_div(&e.sum_keepdim(D::Minus1)?)?)
}

pub fn log_softmax(x: &Tensor) -> Result<Tensor> {
    let max = x.max_keepdim(D::Minus1)?.detach();
    let shifted = x.broadcast_sub(&max)?;
    let lse = shifted.exp()?.sum_keepdim(D::Minus1)?.log()?;
    Ok(shifted.broadcast_sub(&lse)?)
}

/// Cross-entropy over `[batch, classes]` logits, averaged as
/// `sum(w_y * nll) / sum(w_y)`.
pub fn cross_entropy(logits: &Tensor, targets: &Tensor, weights: Option<&Tensor>) -> Result<Tensor> {
    let logp = log_softmax(logits)?;
    let picked = logp.gather(&targets.unsqueeze(1)?, 1)?.squeeze(1)?;
    let nll = picked.neg()?;
    Ok(match weights {
        None => nll.mean_all()?,
        Some(w) => {
            let wy = w.index_select(targets, 0)?;
            nll.mul(&wy)?.sum_all()?.div(&wy.sum_all()?)?
        }
    })
}

/// Sum-of-squares norm along the last axis, kept as a trailing unit axis.
/// `floor` is added under the square root to keep the gradient finite at 0.
pub fn l2_norm(x: &Tensor, floor: f64) -> Result<Tensor> {
    Ok((x.sqr()?.sum_keepdim(D::Minus1)? + floor)?.sqrt()?)
}
