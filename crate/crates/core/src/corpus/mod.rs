//! Posts, corpus files, filtering, preprocessing and split construction.
//!
//! A corpus file holds one JSON record per line:
//!
//! ```text
//! {"id":"1","text":"Finally got the offer!","created_at":"2020-03-01T10:00:00Z","lang":"en",
//!  "is_retweet":false,"is_quote":false,"followers":120,"friends":640,"favorites":3,
//!  "retweets":0,"source":"RANDOM","matched_query":null,"label":"ACHIEVEMENT"}
//! ```

mod emoji;
mod filter;
mod preprocess;
mod split;
mod tokenize;

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::label::BraggingLabel;
use crate::{Error, Result};

pub use emoji::EmojiTable;
pub use filter::{filter_posts, filter_posts_with_report, FilterReport};
pub use preprocess::{preprocess, Preprocessor, TokenSequence, USER_PLACEHOLDER};
pub use split::{make_splits, DatasetSplit, SplitRatio};
pub use tokenize::tokenize;

/// How a post entered the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Source {
    Keyword,
    Hashtag,
    Random,
}

impl Source {
    pub fn is_keyword_sampled(self) -> bool {
        matches!(self, Source::Keyword | Source::Hashtag)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Post {
    pub id: String,
    pub text: String,
    pub created_at: DateTime<Utc>,
    pub lang: String,
    pub is_retweet: bool,
    pub is_quote: bool,
    #[serde(rename = "followers")]
    pub follower_count: u64,
    #[serde(rename = "friends")]
    pub friend_count: u64,
    #[serde(rename = "favorites")]
    pub favorite_count: u64,
    #[serde(rename = "retweets")]
    pub retweet_count: u64,
    pub source: Source,
    pub matched_query: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<BraggingLabel>,
}

impl Post {
    /// A minimal English post; handy for fixtures.
    pub fn new(id: impl Into<String>, text: impl Into<String>, source: Source) -> Self {
        Post {
            id: id.into(),
            text: text.into(),
            created_at: DateTime::<Utc>::UNIX_EPOCH,
            lang: "en".into(),
            is_retweet: false,
            is_quote: false,
            follower_count: 0,
            friend_count: 0,
            favorite_count: 0,
            retweet_count: 0,
            source,
            matched_query: None,
            label: None,
        }
    }

    pub fn with_label(mut self, label: BraggingLabel) -> Self {
        self.label = Some(label);
        self
    }
}

/// Reads a line-delimited corpus file. Blank lines are skipped.
pub fn ingest(path: impl AsRef<Path>) -> Result<Vec<Post>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut posts = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let post: Post =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        if !seen.insert(post.id.clone()) {
            return Err(Error::Integrity(format!(
                "duplicate post id `{}` at {}:{lineno}",
                post.id,
                path.display()
            )));
        }
        posts.push(post);
    }
    Ok(posts)
}

pub fn write_corpus(path: impl AsRef<Path>, posts: &[Post]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_records(&mut w, posts)?;
    w.flush()?;
    Ok(())
}

pub(crate) fn write_records<W: Write, T: Serialize>(w: &mut W, records: &[T]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut *w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
