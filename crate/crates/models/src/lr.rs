//! Multinomial logistic regression over token counts, fitted with L-BFGS.

use serde::{Deserialize, Serialize};

use crate::text::Vocabulary;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrOptions {
    /// Penalty `l2 / 2 * ||W||^2` added to the summed log loss; the bias is
    /// not penalised.
    pub l2: f64,
    pub max_iter: usize,
    /// Per-class sample weights; `None` weighs every post equally.
    pub class_weights: Option<Vec<f64>>,
}

impl Default for LrOptions {
    fn default() -> Self {
        LrOptions {
            l2: 1.0,
            max_iter: 1000,
            class_weights: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub vocab: Vocabulary,
    pub classes: usize,
    /// Row-major `[classes, vocab]`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub iterations: usize,
}

type Sparse = Vec<(usize, f64)>;

fn counts(vocab: &Vocabulary, tokens: &[String]) -> Sparse {
    let mut m: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
    for t in tokens {
        if let Some(id) = vocab.get(t) {
            if id >= 4 {
                *m.entry(id as usize).or_default() += 1.0;
            }
        }
    }
    m.into_iter().collect()
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

struct Problem<'a> {
    x: &'a [Sparse],
    y: &'a [usize],
    w: Vec<f64>,
    k: usize,
    v: usize,
    l2: f64,
}

impl Problem<'_> {
    fn scores(&self, theta: &[f64], row: &Sparse) -> Vec<f64> {
        let bias = &theta[self.k * self.v..];
        (0..self.k)
            .map(|c| bias[c] + row.iter().map(|&(j, x)| theta[c * self.v + j] * x).sum::<f64>())
            .collect()
    }

    fn eval(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let (k, v) = (self.k, self.v);
        let mut f = 0.0;
        grad.iter_mut().for_each(|g| *g = 0.0);
        for ((row, &y), &s) in self.x.iter().zip(self.y).zip(&self.w) {
            let mut p = self.scores(theta, row);
            softmax_in_place(&mut p);
            f -= s * p[y].max(f64::MIN_POSITIVE).ln();
            for c in 0..k {
                let d = s * (p[c] - if c == y { 1.0 } else { 0.0 });
                grad[k * v + c] += d;
                for &(j, x) in row {
                    grad[c * v + j] += d * x;
                }
            }
        }
        for i in 0..k * v {
            f += 0.5 * self.l2 * theta[i] * theta[i];
            grad[i] += self.l2 * theta[i];
        }
        f
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Limited-memory BFGS with Armijo backtracking. Returns the iterate and
/// the number of iterations taken.
fn lbfgs(x0: Vec<f64>, max_iter: usize, mut fg: impl FnMut(&[f64], &mut [f64]) -> f64) -> (Vec<f64>, usize) {
    const M: usize = 10;
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut f = fg(&x, &mut g);
    let mut hist: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)> = std::collections::VecDeque::new();
    let mut iters = 0;
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    while iters < max_iter {
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax <= 1e-6 * (1.0 + f.abs()) {
            break;
        }
        iters += 1;
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &d);
            d.iter_mut().zip(y).for_each(|(di, yi)| *di -= a * yi);
            alphas.push(a);
        }
        let gamma = hist.back().map_or(1.0 / g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0), |(s, y, _)| {
            dot(s, y) / dot(y, y)
        });
        d.iter_mut().for_each(|di| *di *= gamma);
        for ((s, y, rho), a) in hist.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &d);
            d.iter_mut().zip(s).for_each(|(di, si)| *di += (a - b) * si);
        }
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            hist.clear();
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            x_new.iter_mut().zip(&x).zip(&d).for_each(|((xn, xi), di)| *xn = xi + step * di);
            let f_new = fg(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= f + 1e-4 * step * slope {
                let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > 1e-12 {
                    if hist.len() == M {
                        hist.pop_front();
                    }
                    hist.push_back((s, y, 1.0 / sy));
                }
                let rel = (f - f_new).abs() / f.abs().max(f_new.abs()).max(1.0);
                std::mem::swap(&mut x, &mut x_new);
                std::mem::swap(&mut g, &mut g_new);
                f = f_new;
                accepted = true;
                if rel < 1e-12 {
                    return (x, iters);
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (x, iters)
}

impl LogisticRegression {
    pub fn fit(docs: &[Vec<String>], labels: &[usize], classes: usize, opts: &LrOptions) -> Result<Self> {
        if docs.len() != labels.len() {
            return Err(Error::InvalidInput(format!("{} documents but {} labels", docs.len(), labels.len())));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
            return Err(Error::InvalidInput(format!("label index {bad} out of range for {classes} classes")));
        }
        let distinct: std::collections::BTreeSet<usize> = labels.iter().copied().collect();
        if distinct.len() < 2 {
            return Err(Error::DegenerateTraining(format!(
                "logistic regression needs at least two classes, training data has {}",
                distinct.len()
            )));
        }
        let vocab = Vocabulary::build(docs.iter().map(Vec::as_slice), 1);
        let x: Vec<Sparse> = docs.iter().map(|d| counts(&vocab, d)).collect();
        let w = match &opts.class_weights {
            Some(cw) if cw.len() == classes => labels.iter().map(|&y| cw[y]).collect(),
            Some(cw) => return Err(Error::Config(format!("{} class weights for {classes} classes", cw.len()))),
            None => vec![1.0; labels.len()],
        };
        let v = vocab.len();
        let problem = Problem {
            x: &x,
            y: labels,
            w,
            k: classes,
            v,
            l2: opts.l2,
        };
        let (theta, iterations) = lbfgs(vec![0.0; classes * v + classes], opts.max_iter, |t, g| problem.eval(t, g));
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::DegenerateTraining("optimisation produced non-finite weights".into()));
        }
        Ok(LogisticRegression {
            vocab,
            classes,
            weights: theta[..classes * v].to_vec(),
            bias: theta[classes * v..].to_vec(),
            iterations,
        })
    }

    pub fn predict_proba(&self, tokens: &[String]) -> Vec<f64> {
        let row = counts(&self.vocab, tokens);
        let v = self.vocab.len();
        let mut z: Vec<f64> = (0..self.classes)
            .map(|c| self.bias[c] + row.iter().map(|&(j, x)| self.weights[c * v + j] * x).sum::<f64>())
            .collect();
        softmax_in_place(&mut z);
        z
    }
}
