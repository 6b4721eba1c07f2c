use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnnotationRecord;
use crate::{BinaryLabel, BraggingLabel, Error, Result};

/// Alpha level at which calibration rounds are usually considered done.
/// Reported, never enforced.
pub const CALIBRATION_ALPHA: f64 = 0.80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AlphaScheme {
    SevenClass,
    Binary,
}

/// Percentage of items whose first two labels agree. Items with fewer than
/// two labels are skipped.
pub fn percentage_agreement<T: PartialEq>(items: &[Vec<T>]) -> Result<f64> {
    let (mut eligible, mut matching) = (0usize, 0usize);
    for item in items.iter().filter(|i| i.len() >= 2) {
        eligible += 1;
        if item[0] == item[1] {
            matching += 1;
        }
    }
    if eligible == 0 {
        return Err(Error::UndefinedMetric("no item has two labels".into()));
    }
    Ok(100.0 * matching as f64 / eligible as f64)
}

/// Krippendorff's alpha for nominal data, from the coincidence matrix.
///
/// Items with fewer than two labels are not pairable and are ignored.
///
/// ```
/// use braglab_core::annotation::krippendorff_alpha;
///
/// let items = vec![vec!['a', 'a'], vec!['a', 'b'], vec!['b', 'b'], vec!['b', 'b']];
/// let alpha = krippendorff_alpha(&items).unwrap();
/// assert!((alpha - 8.0 / 15.0).abs() < 1e-12);
/// ```
pub fn krippendorff_alpha<T: Ord + Clone>(items: &[Vec<T>]) -> Result<f64> {
    let mut index: BTreeMap<T, usize> = BTreeMap::new();
    let pairable: Vec<&Vec<T>> = items.iter().filter(|i| i.len() >= 2).collect();
    if pairable.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "alpha needs at least 2 items with 2 or more labels, found {}",
            pairable.len()
        )));
    }
    for v in pairable.iter().flat_map(|i| i.iter()) {
        let next = index.len();
        index.entry(v.clone()).or_insert(next);
    }
    let k = index.len();
    let mut o = vec![vec![0.0f64; k]; k];
    let mut counts = vec![0.0f64; k];
    for item in &pairable {
        counts.iter_mut().for_each(|c| *c = 0.0);
        for v in item.iter() {
            counts[index[v]] += 1.0;
        }
        let m = item.len() as f64;
        for c in 0..k {
            for d in 0..k {
                let pairs = if c == d { counts[c] * (counts[c] - 1.0) } else { counts[c] * counts[d] };
                o[c][d] += pairs / (m - 1.0);
            }
        }
    }
    let n_c: Vec<f64> = o.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = n_c.iter().sum();
    let mut observed = 0.0;
    let mut expected = 0.0;
    for c in 0..k {
        for d in 0..k {
            if c != d {
                observed += o[c][d];
                expected += n_c[c] * n_c[d];
            }
        }
    }
    if expected == 0.0 {
        return Err(Error::UndefinedMetric(
            "only one category occurs, expected disagreement is zero".into(),
        ));
    }
    Ok(1.0 - (n - 1.0) * observed / expected)
}

/// Alpha over bragging labels, optionally projected to bragging / not.
pub fn krippendorff_alpha_scheme(items: &[Vec<BraggingLabel>], scheme: AlphaScheme) -> Result<f64> {
    match scheme {
        AlphaScheme::SevenClass => krippendorff_alpha(items),
        AlphaScheme::Binary => {
            let projected: Vec<Vec<BinaryLabel>> =
                items.iter().map(|i| i.iter().map(|l| l.binary()).collect()).collect();
            krippendorff_alpha(&projected)
        }
    }
}

/// Usable labels per post, in submission order (round, time, annotator).
/// NOT_AVAILABLE and consensus records are left out.
pub fn agreement_items(records: &[AnnotationRecord]) -> BTreeMap<String, Vec<BraggingLabel>> {
    let mut sorted: Vec<&AnnotationRecord> =
        records.iter().filter(|r| !r.is_consensus() && r.label.label().is_some()).collect();
    sorted.sort_by(|a, b| {
        (a.round, a.submitted_at, &a.annotator_id).cmp(&(b.round, b.submitted_at, &b.annotator_id))
    });
    let mut items: BTreeMap<String, Vec<BraggingLabel>> = BTreeMap::new();
    for r in sorted {
        items.entry(r.post_id.clone()).or_default().push(r.label.label().unwrap());
    }
    items
}

/// Agreement summary. Metrics that are undefined for the given records are
/// `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub percent_agreement: Option<f64>,
    pub alpha_7class: Option<f64>,
    pub alpha_binary: Option<f64>,
    pub n_items: usize,
    /// Number of items per count of usable labels.
    pub n_annotators_per_item: BTreeMap<usize, usize>,
    /// Whether the seven-class alpha reaches [`CALIBRATION_ALPHA`].
    pub calibration_threshold_met: Option<bool>,
}

impl AgreementReport {
    /// Summarises `records`. With `multi_only`, items labelled once are left
    /// out of the item count and distribution as well as the metrics.
    pub fn compute(records: &[AnnotationRecord], multi_only: bool) -> Self {
        let items: Vec<Vec<BraggingLabel>> = agreement_items(records)
            .into_values()
            .filter(|v| !multi_only || v.len() >= 2)
            .collect();
        let mut dist = BTreeMap::new();
        for i in &items {
            *dist.entry(i.len()).or_default() += 1;
        }
        let alpha_7class = krippendorff_alpha_scheme(&items, AlphaScheme::SevenClass).ok();
        AgreementReport {
            percent_agreement: percentage_agreement(&items).ok(),
            alpha_7class,
            alpha_binary: krippendorff_alpha_scheme(&items, AlphaScheme::Binary).ok(),
            n_items: items.len(),
            n_annotators_per_item: dist,
            calibration_threshold_met: alpha_7class.map(|a| a >= CALIBRATION_ALPHA),
        }
    }
}
