//! Feature–label correlation ranking and post-popularity analysis.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::corpus::Post;
use crate::label::BraggingLabel;
use crate::stats::{correlation_p_value, mean, median, pearson};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub feature: String,
    pub r: f64,
    pub p_value: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRanking {
    pub results: Vec<CorrelationResult>,
    /// Features with zero variance, for which r is undefined.
    pub skipped: Vec<String>,
}

impl CorrelationRanking {
    /// `feature,r,p,n` rows in ranking order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,r,p,n\n");
        for c in &self.results {
            let feature = if c.feature.contains([',', '"']) {
                format!("\"{}\"", c.feature.replace('"', "\"\""))
            } else {
                c.feature.clone()
            };
            out.push_str(&format!("{feature},{:.6},{:.6e},{}\n", c.r, c.p_value, c.n));
        }
        out
    }
}

/// Univariate Pearson correlation of every feature column with a binary
/// indicator. Features missing from a post's map count as 0. Results with
/// `p >= threshold_p` are dropped; the rest are sorted by r, descending.
pub fn feature_label_correlation(
    features: &[BTreeMap<String, f64>],
    labels: &[bool],
    threshold_p: f64,
) -> Result<CorrelationRanking> {
    if features.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} feature rows for {} labels",
            features.len(),
            labels.len()
        )));
    }
    let names: BTreeSet<&String> = features.iter().flat_map(|f| f.keys()).collect();
    let y: Vec<f64> = labels.iter().map(|&b| f64::from(u8::from(b))).collect();
    let n = labels.len();
    let mut ranking = CorrelationRanking::default();
    for name in names {
        let x: Vec<f64> = features.iter().map(|f| f.get(name).copied().unwrap_or(0.0)).collect();
        match pearson(&x, &y) {
            Some(r) => {
                let p_value = correlation_p_value(r, n, 0);
                if p_value < threshold_p {
                    ranking.results.push(CorrelationResult {
                        feature: name.clone(),
                        r,
                        p_value,
                        n,
                    });
                }
            }
            None => ranking.skipped.push(name.clone()),
        }
    }
    ranking
        .results
        .sort_by(|a, b| b.r.total_cmp(&a.r).then_with(|| a.feature.cmp(&b.feature)));
    Ok(ranking)
}

/// Per-post unigram distributions (unit sum), keeping words that occur in at
/// least `min_doc_fraction` of the posts.
pub fn unigram_distributions(docs: &[Vec<String>], min_doc_fraction: f64) -> Vec<BTreeMap<String, f64>> {
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for d in docs {
        for w in d.iter().map(String::as_str).collect::<BTreeSet<_>>() {
            *df.entry(w).or_default() += 1;
        }
    }
    let floor = min_doc_fraction * docs.len() as f64;
    docs.iter()
        .map(|d| {
            let mut counts: BTreeMap<String, f64> = BTreeMap::new();
            for w in d {
                if df[w.as_str()] as f64 >= floor {
                    *counts.entry(w.clone()).or_default() += 1.0;
                }
            }
            let total: f64 = counts.values().sum();
            if total > 0.0 {
                counts.values_mut().for_each(|v| *v /= total);
            }
            counts
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PopularityTarget {
    Favorites,
    Retweets,
}

impl std::str::FromStr for PopularityTarget {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "favorites" | "favourites" | "likes" => Ok(PopularityTarget::Favorites),
            "retweets" => Ok(PopularityTarget::Retweets),
            _ => Err(Error::InvalidInput(format!("unknown popularity target `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Control {
    Followers,
    Friends,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopularityReport {
    pub target: PopularityTarget,
    pub r_partial: f64,
    pub p_value: f64,
    pub n: usize,
    pub controls: Vec<Control>,
    pub dropped_controls: Vec<Control>,
    /// Mean and median of the raw target count per seven-class label.
    pub per_class_stats: BTreeMap<BraggingLabel, (f64, f64)>,
}

/// Residuals of `y` after OLS on an intercept plus `controls` columns.
pub fn residualize(y: &[f64], controls: &[Vec<f64>]) -> Vec<f64> {
    let n = y.len();
    let mut x = DMatrix::from_element(n, controls.len() + 1, 1.0);
    for (j, c) in controls.iter().enumerate() {
        for i in 0..n {
            x[(i, j + 1)] = c[i];
        }
    }
    let yv = DVector::from_column_slice(y);
    let beta = x
        .clone()
        .svd(true, true)
        .solve(&yv, 1e-12)
        .expect("svd was computed with u and v");
    (yv - x * beta).iter().copied().collect()
}

/// Partial correlation of `x` and `y` given `controls`, by correlating OLS
/// residuals. `None` if either residual vector is constant.
pub fn partial_correlation(x: &[f64], y: &[f64], controls: &[Vec<f64>]) -> Option<f64> {
    pearson(&residualize(x, controls), &residualize(y, controls))
}

fn log1p_count(v: u64) -> f64 {
    (v as f64).ln_1p()
}

fn target_count(p: &Post, target: PopularityTarget) -> u64 {
    match target {
        PopularityTarget::Favorites => p.favorite_count,
        PopularityTarget::Retweets => p.retweet_count,
    }
}

/// Partial correlation between `log(1 + target)` and the bragging indicator,
/// controlling for `log(1 + followers)` and `log(1 + friends)`. Unlabelled
/// posts are ignored; zero-variance controls are dropped with a warning.
pub fn popularity_correlation(posts: &[Post], target: PopularityTarget, controls: &[Control]) -> Result<PopularityReport> {
    let labelled: Vec<(&Post, BraggingLabel)> = posts.iter().filter_map(|p| p.label.map(|l| (p, l))).collect();
    let n = labelled.len();
    if n < 10 {
        return Err(Error::InsufficientData(format!("popularity correlation needs at least 10 labelled posts, got {n}")));
    }
    let y: Vec<f64> = labelled.iter().map(|(p, _)| log1p_count(target_count(p, target))).collect();
    let x: Vec<f64> = labelled.iter().map(|(_, l)| f64::from(u8::from(l.is_bragging()))).collect();
    let mut used = Vec::new();
    let mut dropped = Vec::new();
    let mut columns = Vec::new();
    for &c in controls {
        let col: Vec<f64> = labelled
            .iter()
            .map(|(p, _)| match c {
                Control::Followers => log1p_count(p.follower_count),
                Control::Friends => log1p_count(p.friend_count),
            })
            .collect();
        if col.iter().all(|v| *v == col[0]) {
            log::warn!("control {c:?} has zero variance and is dropped");
            dropped.push(c);
        } else {
            used.push(c);
            columns.push(col);
        }
    }
    let r_partial = partial_correlation(&x, &y, &columns)
        .ok_or_else(|| Error::UndefinedMetric("target or label has no variance after controls".into()))?;
    let p_value = correlation_p_value(r_partial, n, columns.len());
    let mut groups: BTreeMap<BraggingLabel, Vec<f64>> = BTreeMap::new();
    for (p, l) in &labelled {
        groups.entry(*l).or_default().push(target_count(p, target) as f64);
    }
    let per_class_stats = groups.into_iter().map(|(l, v)| (l, (mean(&v), median(&v)))).collect();
    Ok(PopularityReport {
        target,
        r_partial,
        p_value,
        n,
        controls: used,
        dropped_controls: dropped,
        per_class_stats,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypePopularity {
    /// (mean, median) favorites per bragging type present in range.
    pub per_class: BTreeMap<BraggingLabel, (f64, f64)>,
    pub n_posts: usize,
    pub omitted: Vec<BraggingLabel>,
}

/// Mean and median favorites per bragging type for posts whose author has
/// follower and friend counts inside the given inclusive ranges.
pub fn type_popularity_stats(
    posts: &[Post],
    followers: std::ops::RangeInclusive<u64>,
    friends: std::ops::RangeInclusive<u64>,
) -> TypePopularity {
    let mut groups: BTreeMap<BraggingLabel, Vec<f64>> = BTreeMap::new();
    let mut n_posts = 0;
    for p in posts {
        if !followers.contains(&p.follower_count) || !friends.contains(&p.friend_count) {
            continue;
        }
        n_posts += 1;
        if let Some(l) = p.label.filter(|l| l.is_bragging()) {
            groups.entry(l).or_default().push(p.favorite_count as f64);
        }
    }
    let omitted = BraggingLabel::BRAGGING_TYPES
        .into_iter()
        .filter(|l| !groups.contains_key(l))
        .collect();
    TypePopularity {
        per_class: groups.into_iter().map(|(l, v)| (l, (mean(&v), median(&v)))).collect(),
        n_posts,
        omitted,
    }
}
