//! Linguistic-feature projection and the multimodal adaptation gate that
//! shifts token embeddings towards a per-post feature vector.

use candle_core::Tensor;
use serde::{Deserialize, Serialize};

use crate::nn::{l2_norm, Ctx, LayerNorm, Linear, ParamStore};
use crate::{Error, Result};

/// Floor added under the square root of the displacement norm. Keeps the
/// gradient finite when the gate closes completely.
pub const NORM_FLOOR: f64 = 1e-12;

/// Learned affine map from a lexicon vector to the fusion width.
#[derive(Debug, Clone)]
pub struct Projection {
    pub linear: Linear,
}

impl Projection {
    pub fn new(store: &mut ParamStore, name: &str, lexicon_dim: usize, target_dim: usize) -> Result<Self> {
        Ok(Projection {
            linear: Linear::new(store, name, lexicon_dim, target_dim)?,
        })
    }

    pub fn forward(&self, features: &Tensor) -> Result<Tensor> {
        let got = features.dims().last().copied().unwrap_or(0);
        if got != self.linear.in_dim() {
            return Err(Error::Config(format!(
                "projection expects {}-d lexicon vectors, got {got}-d",
                self.linear.in_dim()
            )));
        }
        self.linear.forward(features)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagParams {
    pub beta: f64,
    pub epsilon: f64,
    pub dropout: f64,
}

impl Default for MagParams {
    fn default() -> Self {
        MagParams {
            beta: 1.0,
            epsilon: 1e-6,
            dropout: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mag {
    pub gate: Linear,
    pub shift: Linear,
    pub norm: LayerNorm,
    pub params: MagParams,
}

/// Intermediate values of one gate application, exposed for inspection.
pub struct MagParts {
    pub output: Tensor,
    /// `[batch, len, dim]` displacement before scaling.
    pub displacement: Tensor,
    /// `[batch, len, 1]` scaling factors.
    pub alpha: Tensor,
}

impl Mag {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize, feature_dim: usize, params: MagParams) -> Result<Self> {
        Ok(Mag {
            gate: Linear::new(store, &format!("{name}.gate"), dim + feature_dim, dim)?,
            shift: Linear::new(store, &format!("{name}.shift"), feature_dim, dim)?,
            norm: LayerNorm::new(store, &format!("{name}.LayerNorm"), dim, 1e-5)?,
            params,
        })
    }

    /// Fuses `h: [batch, len, dim]` with `f: [batch, feature_dim]`.
    pub fn forward(&self, h: &Tensor, f: &Tensor, ctx: &mut Ctx) -> Result<Tensor> {
        let parts = self.forward_parts(h, f)?;
        ctx.dropout(&parts.output, self.params.dropout)
    }

    pub fn forward_parts(&self, h: &Tensor, f: &Tensor) -> Result<MagParts> {
        let (b, l, d) = h.dims3().map_err(|_| Error::InvalidInput(format!("MAG expects [batch, len, dim], got {:?}", h.dims())))?;
        let p = self.shift.in_dim();
        if d != self.shift.out_dim() || f.dims() != [b, p] {
            return Err(Error::InvalidInput(format!(
                "MAG shape mismatch: h {:?}, f {:?}, expected f [{b}, {p}] and width {}",
                h.dims(),
                f.dims(),
                self.shift.out_dim()
            )));
        }
        let f_tok = f.unsqueeze(1)?.broadcast_as((b, l, p))?.contiguous()?;
        let g = self.gate.forward(&Tensor::cat(&[h, &f_tok], 2)?)?.relu()?;
        let displacement = g.broadcast_mul(&self.shift.forward(f)?.unsqueeze(1)?)?;
        let h_norm = l2_norm(h, 0.0)?;
        let d_norm = l2_norm(&displacement, NORM_FLOOR)?;
        let alpha = ((h_norm / (d_norm + self.params.epsilon)?)? * self.params.beta)?.minimum(1.0)?;
        let output = self.norm.forward(&(h + displacement.broadcast_mul(&alpha)?)?)?;
        Ok(MagParts {
            output,
            displacement,
            alpha,
        })
    }
}
