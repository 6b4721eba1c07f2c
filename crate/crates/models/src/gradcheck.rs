//! Central finite-difference check of autograd gradients.

use candle_core::{Tensor, Var};

use crate::nn::ParamStore;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Number of scalar entries compared.
    pub checked: usize,
    /// Largest `|analytic - numeric| / max(|analytic| + |numeric|, 1e-8)`.
    pub max_rel_error: f64,
    pub worst: Option<String>,
}

/// Compares the gradient of `loss` with respect to every trainable
/// parameter in `store` and every var in `extra` against central
/// differences with step `1e-6`. Meant for f64 models on toy shapes.
pub fn check_gradients(store: &ParamStore, extra: &[Var], loss: impl Fn() -> Result<Tensor>) -> Result<GradCheckReport> {
    let mut targets: Vec<(String, Var)> = store
        .names()
        .filter_map(|n| store.var(n).map(|v| (n.to_string(), v.clone())))
        .collect();
    targets.extend(extra.iter().enumerate().map(|(i, v)| (format!("input{i}"), v.clone())));
    let grads = loss()?.backward()?;
    let step = 1e-6;
    let mut report = GradCheckReport {
        checked: 0,
        max_rel_error: 0.0,
        worst: None,
    };
    for (name, var) in targets {
        let analytic: Vec<f64> = match grads.get(var.as_tensor()) {
            Some(g) => g.flatten_all()?.to_dtype(candle_core::DType::F64)?.to_vec1()?,
            None => vec![0.0; var.elem_count()],
        };
        let original = var.as_tensor().copy()?;
        let base: Vec<f64> = original.flatten_all()?.to_dtype(candle_core::DType::F64)?.to_vec1()?;
        for (i, &a) in analytic.iter().enumerate() {
            let mut bumped = base.clone();
            bumped[i] = base[i] + step;
            var.set(&Tensor::from_vec(bumped.clone(), original.shape(), original.device())?.to_dtype(original.dtype())?)?;
            let up = loss()?.to_dtype(candle_core::DType::F64)?.to_scalar::<f64>()?;
            bumped[i] = base[i] - step;
            var.set(&Tensor::from_vec(bumped, original.shape(), original.device())?.to_dtype(original.dtype())?)?;
            let down = loss()?.to_dtype(candle_core::DType::F64)?.to_scalar::<f64>()?;
            let numeric = (up - down) / (2.0 * step);
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
            report.checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some(format!("{name}[{i}]: analytic {a}, numeric {numeric}"));
            }
        }
        var.set(&original)?;
    }
    Ok(report)
}
