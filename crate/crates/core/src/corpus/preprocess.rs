use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::emoji::EmojiTable;
use super::tokenize::tokenize;

/// Replacement for every `@username` mention.
pub const USER_PLACEHOLDER: &str = "@USER";

static MENTION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\B@\w+").expect("mention regex"));

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub original_post_id: String,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Text normaliser used before featurization and modelling.
///
/// Lowercases, swaps mentions for [`USER_PLACEHOLDER`], names emoji, drops the
/// hashtags used as sampling keywords and tokenizes.
#[derive(Debug, Clone)]
pub struct Preprocessor<'a> {
    emoji: &'a EmojiTable,
    removed_hashtags: HashSet<String>,
}

impl Default for Preprocessor<'static> {
    fn default() -> Self {
        Preprocessor::new(EmojiTable::bundled(), std::iter::empty::<&str>())
    }
}

impl<'a> Preprocessor<'a> {
    pub fn new<I, S>(emoji: &'a EmojiTable, removed_hashtags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let removed_hashtags = removed_hashtags
            .into_iter()
            .map(|h| {
                let h = h.as_ref().trim().to_lowercase();
                if h.starts_with('#') {
                    h
                } else {
                    format!("#{h}")
                }
            })
            .collect();
        Preprocessor {
            emoji,
            removed_hashtags,
        }
    }

    pub fn tokens(&self, text: &str) -> Vec<String> {
        let lowered = self.emoji.demojize(text).to_lowercase();
        let masked = MENTION.replace_all(&lowered, |_: &regex::Captures<'_>| {
            format!(" {USER_PLACEHOLDER} ")
        });
        tokenize(&masked)
            .into_iter()
            .filter(|t| !self.removed_hashtags.contains(t))
            .collect()
    }

    pub fn process(&self, post_id: &str, text: &str) -> TokenSequence {
        TokenSequence {
            tokens: self.tokens(text),
            original_post_id: post_id.to_string(),
        }
    }
}

/// One-shot convenience over [`Preprocessor`] with the bundled emoji table.
pub fn preprocess<S: AsRef<str>>(text: &str, removed_hashtags: &[S]) -> Vec<String> {
    Preprocessor::new(EmojiTable::bundled(), removed_hashtags).tokens(text)
}
