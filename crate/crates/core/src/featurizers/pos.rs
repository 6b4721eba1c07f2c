use std::collections::BTreeMap;

use crate::corpus::USER_PLACEHOLDER;

/// Assigns Penn-style part-of-speech tags to tokens.
pub trait PosTagger: Send + Sync {
    fn tag(&self, tokens: &[String]) -> Vec<String>;

    fn tag_pairs(&self, tokens: &[String]) -> Vec<(String, String)> {
        tokens.iter().cloned().zip(self.tag(tokens)).collect()
    }
}

/// Closed-class lookup plus suffix heuristics. Good enough for tests and
/// rough counts; plug in a proper Twitter tagger for real analyses.
#[derive(Debug, Default, Clone, Copy)]
pub struct RuleTagger;

fn closed_class(t: &str) -> Option<&'static str> {
    Some(match t {
        "i" | "you" | "he" | "she" | "it" | "we" | "they" | "me" | "him" | "us" | "them" | "u" => "PRP",
        "my" | "your" | "his" | "her" | "its" | "our" | "their" | "ur" => "PRP$",
        "the" | "a" | "an" | "this" | "that" | "these" | "those" | "every" | "some" => "DT",
        "in" | "on" | "at" | "of" | "for" | "with" | "from" | "into" | "during" | "over" | "under" | "after"
        | "before" | "about" | "since" | "because" | "if" => "IN",
        "and" | "but" | "or" | "nor" => "CC",
        "can" | "could" | "will" | "would" | "should" | "may" | "might" | "must" | "shall" => "MD",
        "to" => "TO",
        "not" | "so" | "very" | "really" | "just" | "too" | "never" | "always" | "now" | "finally" => "RB",
        "am" | "are" | "have" | "do" => "VBP",
        "is" | "has" | "does" => "VBZ",
        "was" | "were" | "had" | "did" | "got" | "made" | "went" | "won" | "bought" | "saw" | "felt" => "VBD",
        "be" | "get" | "go" | "make" | "buy" | "see" => "VB",
        "been" => "VBN",
        "what" | "who" => "WP",
        "when" | "where" | "why" | "how" => "WRB",
        "happy" | "proud" | "good" | "great" | "new" | "amazing" | "blessed" | "glad" | "excited" | "lucky" | "nice"
        | "awesome" | "smart" | "kind" | "strong" | "big" | "old" | "young" | "whole" | "own" | "chuffed"
        | "first" | "last" => "JJ",
        "better" | "bigger" => "JJR",
        "best" | "most" => "JJS",
        "lol" | "wow" | "omg" | "haha" | "yes" | "yeah" | "oh" => "UH",
        "$" | "£" | "€" => "$",
        "." | "!" | "?" | "..." => ".",
        "," => ",",
        ":" | ";" | "-" => ":",
        _ => return None,
    })
}

impl PosTagger for RuleTagger {
    fn tag(&self, tokens: &[String]) -> Vec<String> {
        tokens
            .iter()
            .map(|t| {
                let tag = if t == USER_PLACEHOLDER || t.starts_with('@') {
                    "NNP"
                } else if t.starts_with('#') || (t.starts_with(':') && t.ends_with(':') && t.len() > 2) {
                    "SYM"
                } else if let Some(tag) = closed_class(t) {
                    tag
                } else if t.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',') && t.chars().any(|c| c.is_ascii_digit()) {
                    "CD"
                } else if t.chars().all(|c| !c.is_alphanumeric()) {
                    "SYM"
                } else if t.contains('\'') || t.contains('’') {
                    "PRP_VBP"
                } else if t.ends_with("ed") {
                    "VBD"
                } else if t.ends_with("ing") {
                    "VBG"
                } else if t.ends_with("ly") {
                    "RB"
                } else if t.ends_with("est") {
                    "JJS"
                } else if t.ends_with("ful") || t.ends_with("ous") || t.ends_with("ive") || t.ends_with("able") {
                    "JJ"
                } else if t.ends_with('s') && t.len() > 3 && !t.ends_with("ss") {
                    "NNS"
                } else {
                    "NN"
                };
                tag.to_string()
            })
            .collect()
    }
}

/// POS unigram and adjacent-bigram counts (`A_B`), jointly normalized to
/// sum to one for the post.
pub fn pos_ngram_features(tagged: &[(String, String)]) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    for (_, tag) in tagged {
        *counts.entry(tag.clone()).or_default() += 1.0;
    }
    for w in tagged.windows(2) {
        *counts.entry(format!("{}_{}", w[0].1, w[1].1)).or_default() += 1.0;
    }
    let total: f64 = counts.values().sum();
    if total > 0.0 {
        counts.values_mut().for_each(|v| *v /= total);
    }
    counts
}
