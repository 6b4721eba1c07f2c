use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::Post;

static URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)https?://|\bt\.co/").expect("url regex"));
static MENTION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@\w+").expect("mention regex"));

/// Why posts were dropped by [`filter_posts_with_report`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input: usize,
    pub kept: usize,
    pub non_english: usize,
    pub retweets: usize,
    pub quotes: usize,
    pub urls: usize,
    pub no_text: usize,
    pub duplicates: usize,
}

fn normalized(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// True when nothing but mentions, emoji, punctuation and whitespace remain.
fn lacks_text(text: &str) -> bool {
    !MENTION.replace_all(text, "").chars().any(char::is_alphanumeric)
}

pub fn filter_posts(posts: Vec<Post>) -> Vec<Post> {
    filter_posts_with_report(posts).0
}

/// Drops non-English posts, retweets, quotes, posts with URLs, posts with no
/// textual content and exact duplicates (after whitespace normalization).
/// The first occurrence of a duplicate survives; order is preserved.
pub fn filter_posts_with_report(posts: Vec<Post>) -> (Vec<Post>, FilterReport) {
    let mut report = FilterReport {
        input: posts.len(),
        ..Default::default()
    };
    let mut seen = HashSet::new();
    let mut kept = Vec::with_capacity(posts.len());
    for post in posts {
        if post.lang != "en" {
            report.non_english += 1;
        } else if post.is_retweet {
            report.retweets += 1;
        } else if post.is_quote {
            report.quotes += 1;
        } else if URL.is_match(&post.text) {
            report.urls += 1;
        } else if lacks_text(&post.text) {
            report.no_text += 1;
        } else if !seen.insert(normalized(&post.text)) {
            report.duplicates += 1;
        } else {
            kept.push(post);
        }
    }
    report.kept = kept.len();
    (kept, report)
}
