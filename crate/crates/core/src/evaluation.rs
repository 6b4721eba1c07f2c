//! Macro-averaged metrics, confusion matrices and seed aggregation.
//!
//! Metrics are reported as percentages. Precision and recall are 0 for a
//! class whose denominator is 0, and every class in the label set counts
//! toward the macro average, whether or not it occurs in the gold labels.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::label::Task;
use crate::stats::{mean, sample_std};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    fn map(self, f: impl Fn(f64) -> f64) -> Prf {
        Prf {
            precision: f(self.precision),
            recall: f(self.recall),
            f1: f(self.f1),
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn index_of<L: Eq + Hash>(label_set: &[L]) -> HashMap<&L, usize> {
    label_set.iter().enumerate().map(|(i, l)| (l, i)).collect()
}

/// Confusion counts, `counts[gold][pred]`, over `label_set` order.
pub fn confusion_counts<L: Eq + Hash + std::fmt::Debug>(
    preds: &[L],
    gold: &[L],
    label_set: &[L],
) -> Result<Vec<Vec<usize>>> {
    if preds.len() != gold.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} gold labels",
            preds.len(),
            gold.len()
        )));
    }
    let idx = index_of(label_set);
    let k = label_set.len();
    let mut m = vec![vec![0usize; k]; k];
    for (p, g) in preds.iter().zip(gold) {
        let (&pi, &gi) = match (idx.get(p), idx.get(g)) {
            (Some(pi), Some(gi)) => (pi, gi),
            _ => return Err(Error::InvalidInput(format!("label {p:?} or {g:?} not in label set"))),
        };
        m[gi][pi] += 1;
    }
    Ok(m)
}

/// Per-class precision/recall/F1 (fractions) from a confusion matrix.
pub fn per_class_prf(counts: &[Vec<usize>]) -> Vec<Prf> {
    let k = counts.len();
    (0..k)
        .map(|c| {
            let tp = counts[c][c];
            let predicted: usize = (0..k).map(|g| counts[g][c]).sum();
            let actual: usize = counts[c].iter().sum();
            let (p, r) = (ratio(tp, predicted), ratio(tp, actual));
            Prf {
                precision: p,
                recall: r,
                f1: f1(p, r),
            }
        })
        .collect()
}

/// Macro precision, recall and F1, as percentages.
pub fn macro_prf<L: Eq + Hash + std::fmt::Debug>(preds: &[L], gold: &[L], label_set: &[L]) -> Result<Prf> {
    let per = per_class_prf(&confusion_counts(preds, gold, label_set)?);
    Ok(macro_of(&per))
}

fn macro_of(per: &[Prf]) -> Prf {
    let k = per.len().max(1) as f64;
    Prf {
        precision: 100.0 * per.iter().map(|p| p.precision).sum::<f64>() / k,
        recall: 100.0 * per.iter().map(|p| p.recall).sum::<f64>() / k,
        f1: 100.0 * per.iter().map(|p| p.f1).sum::<f64>() / k,
    }
}

/// Row-normalizes a count matrix; empty rows stay zero.
pub fn normalize_rows(counts: &[Vec<usize>]) -> Vec<Vec<f64>> {
    counts
        .iter()
        .map(|row| {
            let total: usize = row.iter().sum();
            row.iter().map(|&c| ratio(c, total)).collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub mean: Prf,
    pub std: Prf,
    /// Set when only one seed was available and the std is a placeholder 0.
    pub single_seed: bool,
}

/// Mean and sample standard deviation across seeds.
pub fn seed_aggregate(per_seed: &[Prf]) -> Result<SeedSummary> {
    if per_seed.is_empty() {
        return Err(Error::InvalidInput("no per-seed metrics to aggregate".into()));
    }
    let col = |f: fn(&Prf) -> f64| per_seed.iter().map(f).collect::<Vec<_>>();
    let (p, r, f) = (col(|x| x.precision), col(|x| x.recall), col(|x| x.f1));
    Ok(SeedSummary {
        mean: Prf {
            precision: mean(&p),
            recall: mean(&r),
            f1: mean(&f),
        },
        std: Prf {
            precision: sample_std(&p),
            recall: sample_std(&r),
            f1: sample_std(&f),
        },
        single_seed: per_seed.len() == 1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub labels: Vec<String>,
    pub n: usize,
    pub per_seed: Vec<Prf>,
    pub mean: Prf,
    pub std: Prf,
    pub single_seed: bool,
    /// Confusion counts summed over seeds, `[gold][pred]`.
    pub confusion: Vec<Vec<usize>>,
    pub normalized_confusion: Vec<Vec<f64>>,
    pub per_class: BTreeMap<String, Prf>,
}

impl EvalReport {
    /// Builds a report from one prediction vector per seed, using class
    /// indices `0..task.num_classes()`.
    pub fn from_predictions(task: Task, per_seed_preds: &[Vec<usize>], gold: &[usize]) -> Result<Self> {
        if per_seed_preds.is_empty() {
            return Err(Error::InvalidInput("no predictions".into()));
        }
        if gold.is_empty() {
            return Err(Error::InvalidInput("empty evaluation set".into()));
        }
        let label_set: Vec<usize> = (0..task.num_classes()).collect();
        let k = label_set.len();
        let mut confusion = vec![vec![0usize; k]; k];
        let mut per_seed = Vec::new();
        for preds in per_seed_preds {
            let m = confusion_counts(preds, gold, &label_set)?;
            per_seed.push(macro_of(&per_class_prf(&m)));
            for (row, mrow) in confusion.iter_mut().zip(&m) {
                for (c, v) in row.iter_mut().zip(mrow) {
                    *c += v;
                }
            }
        }
        let summary = seed_aggregate(&per_seed)?;
        let names = task.class_names();
        let per_class = names
            .iter()
            .cloned()
            .zip(per_class_prf(&confusion).into_iter().map(|p| p.map(|x| 100.0 * x)))
            .collect();
        Ok(EvalReport {
            task,
            labels: names,
            n: gold.len(),
            per_seed,
            mean: summary.mean,
            std: summary.std,
            single_seed: summary.single_seed,
            normalized_confusion: normalize_rows(&confusion),
            confusion,
            per_class,
        })
    }

    /// Report restricted to the positions in `subset`.
    pub fn subset(task: Task, per_seed_preds: &[Vec<usize>], gold: &[usize], subset: &[usize]) -> Result<Self> {
        if subset.is_empty() {
            return Err(Error::InvalidInput("empty evaluation subset".into()));
        }
        let pick = |v: &[usize]| subset.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let preds: Vec<Vec<usize>> = per_seed_preds.iter().map(|p| pick(p)).collect();
        Self::from_predictions(task, &preds, &pick(gold))
    }

    /// Confusion matrix as CSV with a header row of predicted labels.
    pub fn confusion_csv(&self, normalized: bool) -> String {
        let mut out = String::from("gold\\pred");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for (i, l) in self.labels.iter().enumerate() {
            out.push_str(l);
            for j in 0..self.labels.len() {
                out.push(',');
                if normalized {
                    out.push_str(&format!("{:.4}", self.normalized_confusion[i][j]));
                } else {
                    out.push_str(&self.confusion[i][j].to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

/// One point of a learning curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub train_fraction: f64,
    pub train_size: usize,
    /// F1 percentage per class present in the subsample.
    pub per_class_f1: BTreeMap<String, f64>,
    pub macro_f1: f64,
    /// Classes with no training example at this fraction.
    pub skipped_classes: Vec<String>,
}

/// Checks that learning-curve fractions lie in (0, 1] and increase strictly.
pub fn validate_fractions(fractions: &[f64]) -> Result<()> {
    if fractions.is_empty() {
        return Err(Error::InvalidInput("no training fractions given".into()));
    }
    for w in fractions.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidInput(format!("fractions must increase strictly: {fractions:?}")));
        }
    }
    if fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
        return Err(Error::InvalidInput(format!("fractions must lie in (0, 1]: {fractions:?}")));
    }
    Ok(())
}

/// Positions of a seeded, per-class subsample holding `round(n_c * fraction)`
/// items of each class `c`, returned in their original order. A fraction of
/// 1 returns every position.
pub fn stratified_subsample(labels: &[usize], fraction: f64, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    if fraction >= 1.0 {
        return (0..labels.len()).collect();
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut keep = Vec::new();
    for (_, mut idx) in by_class {
        let take = (idx.len() as f64 * fraction).round() as usize;
        idx.shuffle(&mut rng);
        keep.extend_from_slice(&idx[..take]);
    }
    keep.sort_unstable();
    keep
}

/// Rounds to two decimals, the precision used when reporting metrics.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}
