//! Annotation records, label aggregation, agreement statistics and the
//! append-only annotation store behind the labelling service.

mod agreement;
mod store;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{BraggingLabel, Error, Result};

pub use agreement::{
    agreement_items, krippendorff_alpha, krippendorff_alpha_scheme, percentage_agreement, AgreementReport,
    AlphaScheme, CALIBRATION_ALPHA,
};
pub use store::{read_log, AnnotationStore, StoreOptions, RECORD_LOG};

/// Annotator id reserved for adjudicated labels.
pub const CONSENSUS_ANNOTATOR: &str = "consensus";

/// Annotator guidelines shown to labellers.
pub const GUIDELINES: &str = include_str!("../../data/guidelines.md");

/// One of the seven labels, or the "not available" escape hatch for posts
/// that cannot be judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AnnotationLabel {
    Label(BraggingLabel),
    NotAvailable,
}

impl AnnotationLabel {
    pub const NOT_AVAILABLE: &'static str = "NOT_AVAILABLE";

    pub fn label(self) -> Option<BraggingLabel> {
        match self {
            AnnotationLabel::Label(l) => Some(l),
            AnnotationLabel::NotAvailable => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AnnotationLabel::Label(l) => l.as_str(),
            AnnotationLabel::NotAvailable => Self::NOT_AVAILABLE,
        }
    }
}

impl From<BraggingLabel> for AnnotationLabel {
    fn from(l: BraggingLabel) -> Self {
        AnnotationLabel::Label(l)
    }
}

impl fmt::Display for AnnotationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnnotationLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == Self::NOT_AVAILABLE {
            return Ok(AnnotationLabel::NotAvailable);
        }
        s.parse::<BraggingLabel>().map(AnnotationLabel::Label)
    }
}

impl Serialize for AnnotationLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for AnnotationLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub post_id: String,
    pub annotator_id: String,
    pub label: AnnotationLabel,
    pub round: u32,
    pub submitted_at: DateTime<Utc>,
}

impl AnnotationRecord {
    pub fn new(
        post_id: impl Into<String>,
        annotator_id: impl Into<String>,
        label: impl Into<AnnotationLabel>,
        round: u32,
    ) -> Self {
        AnnotationRecord {
            post_id: post_id.into(),
            annotator_id: annotator_id.into(),
            label: label.into(),
            round,
            submitted_at: Utc::now(),
        }
    }

    pub fn key(&self) -> (&str, &str, u32) {
        (&self.post_id, &self.annotator_id, self.round)
    }

    pub fn is_consensus(&self) -> bool {
        self.annotator_id == CONSENSUS_ANNOTATOR
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AggregationMethod {
    Single,
    Majority,
    Consensus,
}

/// Final label of a post. `final_label` and `method` are `None` exactly when
/// the post still needs adjudication.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregationResult {
    pub post_id: String,
    pub final_label: Option<BraggingLabel>,
    pub method: Option<AggregationMethod>,
    pub needs_adjudication: bool,
}

/// Most recent usable vote per annotator, keyed by annotator id.
fn latest_votes<'a>(records: impl IntoIterator<Item = &'a AnnotationRecord>) -> BTreeMap<&'a str, (u32, BraggingLabel)> {
    let mut votes: BTreeMap<&str, (u32, BraggingLabel)> = BTreeMap::new();
    for r in records {
        let Some(label) = r.label.label() else { continue };
        let e = votes.entry(r.annotator_id.as_str()).or_insert((r.round, label));
        if r.round > e.0 {
            *e = (r.round, label);
        }
    }
    votes
}

/// Combines the records of one post into a final label.
///
/// Each annotator contributes the label from their latest round. A record
/// from [`CONSENSUS_ANNOTATOR`] overrides the vote. Otherwise a single vote
/// wins outright, a strict plurality wins as a majority, and anything else
/// is left for adjudication.
///
/// ```
/// use braglab_core::annotation::{aggregate, AggregationMethod, AnnotationRecord};
/// use braglab_core::BraggingLabel::*;
///
/// let recs = [
///     AnnotationRecord::new("p1", "a", Achievement, 0),
///     AnnotationRecord::new("p1", "b", Achievement, 0),
///     AnnotationRecord::new("p1", "c", Action, 0),
/// ];
/// let agg = aggregate("p1", &recs).unwrap();
/// assert_eq!(agg.final_label, Some(Achievement));
/// assert_eq!(agg.method, Some(AggregationMethod::Majority));
/// ```
pub fn aggregate(post_id: &str, records: &[AnnotationRecord]) -> Result<AggregationResult> {
    let mine = records.iter().filter(|r| r.post_id == post_id);
    let (consensus, votes): (Vec<_>, Vec<_>) = mine.partition(|r| r.is_consensus());
    let decided = |label, method| AggregationResult {
        post_id: post_id.to_string(),
        final_label: Some(label),
        method: Some(method),
        needs_adjudication: false,
    };
    if let Some((_, label)) = latest_votes(consensus).remove(CONSENSUS_ANNOTATOR) {
        return Ok(decided(label, AggregationMethod::Consensus));
    }
    let votes = latest_votes(votes);
    match votes.len() {
        0 => Err(Error::NoLabel(post_id.to_string())),
        1 => Ok(decided(votes.values().next().unwrap().1, AggregationMethod::Single)),
        _ => {
            let mut counts: BTreeMap<BraggingLabel, usize> = BTreeMap::new();
            for (_, l) in votes.values() {
                *counts.entry(*l).or_default() += 1;
            }
            let mut ranked: Vec<(BraggingLabel, usize)> = counts.into_iter().collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1));
            if ranked.len() == 1 || ranked[0].1 > ranked[1].1 {
                Ok(decided(ranked[0].0, AggregationMethod::Majority))
            } else {
                Ok(AggregationResult {
                    post_id: post_id.to_string(),
                    final_label: None,
                    method: None,
                    needs_adjudication: true,
                })
            }
        }
    }
}

/// Aggregates every post that has at least one usable vote, sorted by post
/// id. Posts with only NOT_AVAILABLE records are returned separately.
pub fn aggregate_all(records: &[AnnotationRecord]) -> (Vec<AggregationResult>, Vec<String>) {
    let mut by_post: BTreeMap<&str, Vec<AnnotationRecord>> = BTreeMap::new();
    for r in records {
        by_post.entry(&r.post_id).or_default().push(r.clone());
    }
    let mut results = Vec::new();
    let mut unlabeled = Vec::new();
    for (id, recs) in by_post {
        match aggregate(id, &recs) {
            Ok(a) => results.push(a),
            Err(_) => unlabeled.push(id.to_string()),
        }
    }
    (results, unlabeled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use BraggingLabel::*;

    fn votes(labels: &[BraggingLabel]) -> Vec<AnnotationRecord> {
        labels
            .iter()
            .enumerate()
            .map(|(i, &l)| AnnotationRecord::new("p", format!("a{i}"), l, 0))
            .collect()
    }

    #[test]
    fn aggregation_rules() {
        let a = aggregate("p", &votes(&[Achievement, Achievement, Action])).unwrap();
        assert_eq!((a.final_label, a.method), (Some(Achievement), Some(AggregationMethod::Majority)));
        let a = aggregate("p", &votes(&[Feeling])).unwrap();
        assert_eq!((a.final_label, a.method), (Some(Feeling), Some(AggregationMethod::Single)));
        let a = aggregate("p", &votes(&[Action, Feeling, Trait])).unwrap();
        assert!(a.needs_adjudication);
        assert_eq!(a.final_label, None);
        let a = aggregate("p", &votes(&[Action, Feeling])).unwrap();
        assert!(a.needs_adjudication);
        let a = aggregate("p", &votes(&[NotBragging, NotBragging])).unwrap();
        assert_eq!(a.method, Some(AggregationMethod::Majority));
    }

    #[test]
    fn consensus_resolves_three_way_split() {
        let mut recs = votes(&[Action, Feeling, Trait]);
        recs.push(AnnotationRecord::new("p", CONSENSUS_ANNOTATOR, Feeling, 1));
        let a = aggregate("p", &recs).unwrap();
        assert_eq!((a.final_label, a.method), (Some(Feeling), Some(AggregationMethod::Consensus)));
        assert!(!a.needs_adjudication);
    }

    #[test]
    fn not_available_is_ignored() {
        let mut recs = votes(&[Trait]);
        recs.push(AnnotationRecord::new("p", "x", AnnotationLabel::NotAvailable, 0));
        assert_eq!(aggregate("p", &recs).unwrap().method, Some(AggregationMethod::Single));
        let na = vec![AnnotationRecord::new("p", "x", AnnotationLabel::NotAvailable, 0)];
        assert!(matches!(aggregate("p", &na), Err(Error::NoLabel(_))));
    }

    #[test]
    fn later_round_replaces_earlier_vote() {
        let recs = vec![
            AnnotationRecord::new("p", "a", Action, 0),
            AnnotationRecord::new("p", "a", Trait, 1),
            AnnotationRecord::new("p", "b", Trait, 0),
        ];
        let a = aggregate("p", &recs).unwrap();
        assert_eq!((a.final_label, a.method), (Some(Trait), Some(AggregationMethod::Majority)));
    }

    #[test]
    fn label_strings() {
        assert_eq!("NOT_AVAILABLE".parse::<AnnotationLabel>().unwrap(), AnnotationLabel::NotAvailable);
        assert_eq!("TRAIT".parse::<AnnotationLabel>().unwrap(), AnnotationLabel::Label(Trait));
        assert!("BOASTING".parse::<AnnotationLabel>().is_err());
        let r = AnnotationRecord::new("p", "a", AnnotationLabel::NotAvailable, 2);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"NOT_AVAILABLE\""));
        assert_eq!(serde_json::from_str::<AnnotationRecord>(&json).unwrap(), r);
        assert!(serde_json::from_str::<AnnotationRecord>(&json.replace("NOT_AVAILABLE", "MAYBE")).is_err());
    }

    proptest! {
        #[test]
        fn aggregate_is_order_invariant(
            labels in proptest::collection::vec(0usize..8, 1..7),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let recs: Vec<AnnotationRecord> = labels
                .iter()
                .enumerate()
                .map(|(i, &l)| {
                    let label = BraggingLabel::ALL.get(l).copied().map_or(AnnotationLabel::NotAvailable, AnnotationLabel::Label);
                    AnnotationRecord::new("p", format!("a{}", i % 3), label, (i / 3) as u32)
                })
                .collect();
            let mut shuffled = recs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = aggregate("p", &recs).ok();
            let b = aggregate("p", &shuffled).ok();
            prop_assert_eq!(a, b);
        }
    }
}
