//! Keyword and hashtag queries, query matching, hit-rate pruning and pool
//! sampling.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Post};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum QueryKind {
    Multiword,
    Hashtag,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub kind: QueryKind,
    pub terms: Vec<String>,
}

impl Query {
    pub fn multiword<S: AsRef<str>>(terms: &[S]) -> Result<Self> {
        let terms: Vec<String> = terms.iter().map(|t| t.as_ref().to_lowercase()).collect();
        let q = Query {
            id: terms.join("+"),
            kind: QueryKind::Multiword,
            terms,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn hashtag(tag: &str) -> Result<Self> {
        let tag = tag.to_lowercase();
        let q = Query {
            id: tag.clone(),
            kind: QueryKind::Hashtag,
            terms: vec![tag],
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            QueryKind::Multiword if self.terms.len() < 2 => Err(Error::InvalidInput(format!(
                "multi-word query `{}` needs at least two terms",
                self.id
            ))),
            QueryKind::Hashtag if self.terms.len() != 1 || !self.terms[0].starts_with('#') => {
                Err(Error::InvalidInput(format!(
                    "hashtag query `{}` must be a single term starting with '#'",
                    self.id
                )))
            }
            _ => Ok(()),
        }
    }

    /// Token-level match against the lowercased, raw-tokenized post text.
    pub fn matches(&self, text: &str) -> bool {
        let tokens: HashSet<String> = tokenize(&text.to_lowercase()).into_iter().collect();
        self.matches_tokens(&tokens)
    }

    pub fn matches_tokens(&self, tokens: &HashSet<String>) -> bool {
        self.terms.iter().all(|t| tokens.contains(&t.to_lowercase()))
    }
}

pub fn match_query(post: &Post, query: &Query) -> bool {
    query.matches(&post.text)
}

const DEFAULT_MULTIWORD: [[&str; 2]; 17] = [
    ["i", "proud"],
    ["i", "glad"],
    ["i", "happy"],
    ["i", "best"],
    ["i", "amazed"],
    ["i", "amazing"],
    ["i", "excellent"],
    ["i", "just"],
    ["i'm", "proud"],
    ["i'm", "glad"],
    ["i'm", "happy"],
    ["i'm", "best"],
    ["i'm", "amazed"],
    ["i'm", "amazing"],
    ["i'm", "excellent"],
    ["me", "proud"],
    ["my", "best"],
];

const DEFAULT_HASHTAGS: [&str; 5] = ["#brag", "#bragging", "#humblebrag", "#humble", "#braggingrights"];

/// Pronoun + indicator queries and bragging hashtags used for keyword sampling.
pub fn build_default_queries() -> Vec<Query> {
    DEFAULT_MULTIWORD
        .iter()
        .map(|t| Query::multiword(t).expect("default query"))
        .chain(DEFAULT_HASHTAGS.iter().map(|h| Query::hashtag(h).expect("default hashtag")))
        .collect()
}

/// Hashtags used as sampling keywords; these are stripped during preprocessing.
pub fn keyword_hashtags(queries: &[Query]) -> Vec<String> {
    queries
        .iter()
        .filter(|q| q.kind == QueryKind::Hashtag)
        .map(|q| q.terms[0].clone())
        .collect()
}

pub fn load_queries(path: impl AsRef<Path>) -> Result<Vec<Query>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let q: Query = serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        q.validate().map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        out.push(q);
    }
    Ok(out)
}

pub fn write_queries(path: impl AsRef<Path>, queries: &[Query]) -> Result<()> {
    let mut f = std::io::BufWriter::new(File::create(path)?);
    crate::corpus::write_records(&mut f, queries)?;
    std::io::Write::flush(&mut f)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryStats {
    pub query_id: String,
    pub sampled: usize,
    pub bragging: usize,
    pub hit_rate: f64,
}

impl QueryStats {
    pub fn new(query_id: impl Into<String>, sampled: usize, bragging: usize) -> Result<Self> {
        if bragging > sampled {
            return Err(Error::InvalidInput("bragging count exceeds sampled count".into()));
        }
        let hit_rate = if sampled > 0 {
            bragging as f64 / sampled as f64
        } else {
            0.0
        };
        Ok(QueryStats {
            query_id: query_id.into(),
            sampled,
            bragging,
            hit_rate,
        })
    }
}

/// Hit rates from the first `first_n` labelled posts matching each query.
///
/// Posts are visited in the given order; unlabelled posts are ignored.
pub fn estimate_hit_rates(queries: &[Query], posts: &[Post], first_n: usize) -> Vec<QueryStats> {
    let token_sets: Vec<(HashSet<String>, bool)> = posts
        .iter()
        .filter_map(|p| {
            p.label
                .map(|l| (tokenize(&p.text.to_lowercase()).into_iter().collect(), l.is_bragging()))
        })
        .collect();
    queries
        .iter()
        .map(|q| {
            let (mut sampled, mut bragging) = (0, 0);
            for (tokens, is_brag) in &token_sets {
                if sampled == first_n {
                    break;
                }
                if q.matches_tokens(tokens) {
                    sampled += 1;
                    bragging += usize::from(*is_brag);
                }
            }
            QueryStats::new(q.id.clone(), sampled, bragging).expect("bragging <= sampled")
        })
        .collect()
}

/// Keeps the queries whose bragging hit rate is at least `threshold`.
pub fn prune_queries(queries: &[Query], stats: &[QueryStats], threshold: f64) -> Result<Vec<Query>> {
    let by_id: BTreeMap<&str, &QueryStats> = stats.iter().map(|s| (s.query_id.as_str(), s)).collect();
    let mut kept = Vec::new();
    for q in queries {
        let s = by_id
            .get(q.id.as_str())
            .filter(|s| s.sampled > 0)
            .ok_or_else(|| Error::MissingStats(q.id.clone()))?;
        if s.hit_rate >= threshold {
            kept.push(q.clone());
        }
    }
    Ok(kept)
}

/// Keeps every hashtag-pool post plus a uniform sample of
/// `floor(rate * |query_pool|)` query-pool posts, then shuffles the union.
pub fn sample_pools(hashtag_pool: &[Post], query_pool: &[Post], rate: f64, seed: u64) -> Result<Vec<Post>> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidInput(format!("sampling rate must be in (0, 1], got {rate}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = (rate * query_pool.len() as f64).floor() as usize;
    let mut out: Vec<Post> = hashtag_pool.to_vec();
    out.extend(query_pool.choose_multiple(&mut rng, k).cloned());
    out.shuffle(&mut rng);
    Ok(out)
}
