use std::collections::HashMap;

use braglab_core::corpus::{DatasetSplit, Post, Preprocessor};
use braglab_core::{BraggingLabel, Task};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A preprocessed, labelled post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub tokens: Vec<String>,
    pub label: BraggingLabel,
}

impl Example {
    pub fn new(id: impl Into<String>, tokens: Vec<String>, label: BraggingLabel) -> Self {
        Example {
            id: id.into(),
            tokens,
            label,
        }
    }

    /// `None` when the post carries no label.
    pub fn from_post(post: &Post, pre: &Preprocessor) -> Option<Self> {
        Some(Example::new(post.id.clone(), pre.tokens(&post.text), post.label?))
    }
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub train: Vec<Example>,
    pub dev: Vec<Example>,
    pub test: Vec<Example>,
}

impl Dataset {
    /// Preprocesses the posts named by `split`. Every post in the split must
    /// exist and carry a label.
    pub fn from_split(posts: &[Post], split: &DatasetSplit, pre: &Preprocessor) -> Result<Self> {
        let by_id: HashMap<&str, &Post> = posts.iter().map(|p| (p.id.as_str(), p)).collect();
        let pick = |ids: &[String]| -> Result<Vec<Example>> {
            ids.iter()
                .map(|id| {
                    let post = by_id
                        .get(id.as_str())
                        .ok_or_else(|| Error::Core(braglab_core::Error::NotFound(format!("post `{id}` from the split"))))?;
                    Example::from_post(post, pre).ok_or_else(|| Error::Core(braglab_core::Error::NoLabel(id.clone())))
                })
                .collect()
        };
        Ok(Dataset {
            train: pick(&split.train_ids)?,
            dev: pick(&split.dev_ids)?,
            test: pick(&split.test_ids)?,
        })
    }
}

pub fn class_indices(task: Task, examples: &[Example]) -> Vec<usize> {
    examples.iter().map(|e| task.class_of(e.label)).collect()
}

pub fn class_counts(task: Task, examples: &[Example]) -> Vec<usize> {
    let mut counts = vec![0; task.num_classes()];
    for e in examples {
        counts[task.class_of(e.label)] += 1;
    }
    counts
}

/// Inverse-frequency weights `N / (K * n_c)`. Classes with no examples get
/// weight 0 here.
pub fn inverse_frequency_weights(counts: &[usize]) -> Vec<f64> {
    let n: usize = counts.iter().sum();
    let k = counts.len() as f64;
    counts
        .iter()
        .map(|&c| if c == 0 { 0.0 } else { n as f64 / (k * c as f64) })
        .collect()
}

/// Inverse-frequency weights rescaled so the mean weight over the classes
/// that occur is 1. Absent classes get weight 1.
pub fn class_weights(counts: &[usize]) -> Vec<f64> {
    let raw = inverse_frequency_weights(counts);
    let present: Vec<f64> = raw.iter().copied().filter(|&w| w > 0.0).collect();
    if present.is_empty() {
        return vec![1.0; counts.len()];
    }
    let mean = present.iter().sum::<f64>() / present.len() as f64;
    raw.iter().map(|&w| if w > 0.0 { w / mean } else { 1.0 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_frequency_hand_values() {
        let raw = inverse_frequency_weights(&[90, 10]);
        assert!((raw[0] - 100.0 / 180.0).abs() < 1e-12);
        assert!((raw[1] - 5.0).abs() < 1e-12);
        let w = class_weights(&[90, 10]);
        assert!((w.iter().sum::<f64>() / 2.0 - 1.0).abs() < 1e-12);
        assert!((w[1] / w[0] - 9.0).abs() < 1e-12);
        assert_eq!(class_weights(&[5, 5, 5]), [1.0, 1.0, 1.0]);
        assert_eq!(class_weights(&[5, 0]), [1.0, 1.0]);
    }
}
