//! Bidirectional GRU encoder with additive self-attention pooling.

use candle_core::{Tensor, D};

use crate::nn::{masked_softmax, sigmoid, Ctx, Init, Linear, ParamStore};
use crate::{Error, Result};

/// One GRU direction, PyTorch gate layout `[reset; update; new]`.
#[derive(Debug, Clone)]
pub struct GruCell {
    pub w_ih: Linear,
    pub w_hh: Linear,
    pub hidden: usize,
}

impl GruCell {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, hidden: usize) -> Result<Self> {
        Ok(GruCell {
            w_ih: Linear::new(store, &format!("{name}.ih"), input, 3 * hidden)?,
            w_hh: Linear::new(store, &format!("{name}.hh"), hidden, 3 * hidden)?,
            hidden,
        })
    }

    /// Runs over `x: [batch, len, input]`. Positions where `mask` is 0 keep
    /// the previous state, so padding never reaches real tokens from either
    /// direction. Returns `[batch, len, hidden]`.
    pub fn run(&self, x: &Tensor, mask: &Tensor, reverse: bool) -> Result<Tensor> {
        let (b, l, _) = x.dims3()?;
        let hd = self.hidden;
        let gx = self.w_ih.forward(x)?;
        let mut h = Tensor::zeros((b, hd), x.dtype(), x.device())?;
        let mut outs = vec![None; l];
        let order: Vec<usize> = if reverse { (0..l).rev().collect() } else { (0..l).collect() };
        for t in order {
            let gxt = gx.narrow(1, t, 1)?.squeeze(1)?;
            let gh = self.w_hh.forward(&h)?;
            let r = sigmoid(&(gxt.narrow(1, 0, hd)? + gh.narrow(1, 0, hd)?)?)?;
            let z = sigmoid(&(gxt.narrow(1, hd, hd)? + gh.narrow(1, hd, hd)?)?)?;
            let n = (gxt.narrow(1, 2 * hd, hd)? + r.mul(&gh.narrow(1, 2 * hd, hd)?)?)?.tanh()?;
            let cand = ((z.ones_like()? - &z)?.mul(&n)? + z.mul(&h)?)?;
            let m = mask.narrow(1, t, 1)?;
            h = (cand.broadcast_mul(&m)? + h.broadcast_mul(&(m.ones_like()? - &m)?)?)?;
            outs[t] = Some(h.clone());
        }
        let outs: Vec<Tensor> = outs.into_iter().map(|o| o.unwrap()).collect();
        Ok(Tensor::stack(&outs, 1)?)
    }
}

#[derive(Debug, Clone)]
pub struct BiGruAtt {
    pub forward_cell: GruCell,
    pub backward_cell: GruCell,
    pub att_proj: Linear,
    pub att_vector: Tensor,
    pub output: Linear,
    pub dropout: f64,
}

pub struct BiGruOutput {
    pub logits: Tensor,
    /// `[batch, len]`, rows sum to one over unmasked positions.
    pub attention: Tensor,
    /// `[batch, 2 * hidden]` attention-weighted state.
    pub context: Tensor,
    /// `[batch, len, 2 * hidden]` concatenated directional states.
    pub states: Tensor,
}

impl BiGruAtt {
    pub fn new(store: &mut ParamStore, input: usize, hidden: usize, classes: usize, dropout: f64) -> Result<Self> {
        let h2 = 2 * hidden;
        Ok(BiGruAtt {
            forward_cell: GruCell::new(store, "gru.forward", input, hidden)?,
            backward_cell: GruCell::new(store, "gru.backward", input, hidden)?,
            att_proj: Linear::new(store, "attention.proj", h2, h2)?,
            att_vector: store.get("attention.vector", &[h2, 1], Init::Uniform(1.0 / (h2 as f64).sqrt()))?,
            output: Linear::new(store, "output", h2, classes)?,
            dropout,
        })
    }

    /// Scores a batch of embedded sequences `x: [batch, len, input]` with
    /// `mask: [batch, len]` marking real tokens.
    pub fn forward(&self, x: &Tensor, mask: &Tensor, ctx: &mut Ctx) -> Result<BiGruOutput> {
        let (_, l, _) = x.dims3()?;
        if l == 0 {
            return Err(Error::InvalidInput("empty token sequence".into()));
        }
        let x = ctx.dropout(x, self.dropout)?;
        let fwd = self.forward_cell.run(&x, mask, false)?;
        let bwd = self.backward_cell.run(&x, mask, true)?;
        let states = Tensor::cat(&[&fwd, &bwd], 2)?;
        let scores = self.att_proj.forward(&states)?.tanh()?.broadcast_matmul(&self.att_vector)?.squeeze(D::Minus1)?;
        let attention = masked_softmax(&scores, mask)?;
        let context = attention.unsqueeze(2)?.broadcast_mul(&states)?.sum(1)?;
        let logits = self.output.forward(&ctx.dropout(&context, self.dropout)?)?;
        Ok(BiGruOutput {
            logits,
            attention,
            context,
            states,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::check_gradients;
    use candle_core::{DType, Device};

    fn model(seed: u64) -> (ParamStore, BiGruAtt) {
        let mut store = ParamStore::new(DType::F64, seed);
        let m = BiGruAtt::new(&mut store, 5, 4, 3, 0.0).unwrap();
        (store, m)
    }

    fn input(b: usize, l: usize, seed: u64) -> Tensor {
        ParamStore::new(DType::F64, seed).get("x", &[b, l, 5], Init::Normal(1.0)).unwrap()
    }

    fn ones(b: usize, l: usize) -> Tensor {
        Tensor::ones((b, l), DType::F64, &Device::Cpu).unwrap()
    }

    #[test]
    fn attention_sums_to_one() {
        let (_, m) = model(1);
        let out = m.forward(&input(3, 6, 2), &ones(3, 6), &mut Ctx::eval()).unwrap();
        for row in out.attention.to_vec2::<f64>().unwrap() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(out.logits.dims(), [3, 3]);
    }

    #[test]
    fn identical_states_give_uniform_attention() {
        let (_, m) = model(1);
        let out = m.forward(&input(1, 4, 2), &ones(1, 4), &mut Ctx::eval()).unwrap();
        let same = out.states.narrow(1, 0, 1).unwrap().broadcast_as((1, 4, 8)).unwrap().contiguous().unwrap();
        let scores = m.att_proj.forward(&same).unwrap().tanh().unwrap().broadcast_matmul(&m.att_vector).unwrap().squeeze(2).unwrap();
        let a = masked_softmax(&scores, &ones(1, 4)).unwrap().to_vec2::<f64>().unwrap();
        assert!(a[0].iter().all(|&v| (v - 0.25).abs() < 1e-12));
    }

    #[test]
    fn single_token_context_is_its_state() {
        let (_, m) = model(3);
        let out = m.forward(&input(2, 1, 4), &ones(2, 1), &mut Ctx::eval()).unwrap();
        assert_eq!(
            out.context.to_vec2::<f64>().unwrap(),
            out.states.squeeze(1).unwrap().to_vec2::<f64>().unwrap()
        );
    }

    #[test]
    fn padding_does_not_change_scores() {
        let (_, m) = model(5);
        let x = input(1, 3, 6);
        let short = m.forward(&x, &ones(1, 3), &mut Ctx::eval()).unwrap().logits.to_vec2::<f64>().unwrap();
        let pad = input(1, 4, 7);
        let padded = Tensor::cat(&[&x, &pad], 1).unwrap();
        let mask = Tensor::new(&[[1.0f64, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]], &Device::Cpu).unwrap();
        let long = m.forward(&padded, &mask, &mut Ctx::eval()).unwrap().logits.to_vec2::<f64>().unwrap();
        for (a, b) in short[0].iter().zip(&long[0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_sequence_errors() {
        let (_, m) = model(1);
        let x = Tensor::zeros((1, 0, 5), DType::F64, &Device::Cpu).unwrap();
        assert!(m.forward(&x, &ones(1, 0), &mut Ctx::eval()).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (store, m) = model(11);
        let x = input(2, 3, 12);
        let mask = Tensor::new(&[[1.0f64, 1.0, 1.0], [1.0, 1.0, 0.0]], &Device::Cpu).unwrap();
        let y = Tensor::new(&[0u32, 2], &Device::Cpu).unwrap();
        let report = check_gradients(&store, &[], || {
            let out = m.forward(&x, &mask, &mut Ctx::eval())?;
            crate::nn::cross_entropy(&out.logits, &y, None)
        })
        .unwrap();
        assert!(report.max_rel_error < 1e-4, "{report:?}");
    }
}
