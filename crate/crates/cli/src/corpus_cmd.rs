use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use braglab_core::corpus::{
    filter_posts_with_report, ingest as read_corpus, make_splits, DatasetSplit, EmojiTable, Post, Preprocessor, Source,
    SplitRatio,
};
use braglab_core::featurizers::{
    cluster_vector, liwc_vector, nrc_vector, pos_ngram_features, self_disclosure_label, ClusterMap, Lexicon, PosTagger,
    RuleTagger, DEFAULT_CLUSTERS,
};
use braglab_core::sampling::{
    build_default_queries, estimate_hit_rates, keyword_hashtags, load_queries, match_query, prune_queries, sample_pools,
    Query, QueryKind, QueryStats,
};
use braglab_core::BraggingLabel;
use clap::{Args, ValueEnum};
use serde_json::json;

use crate::resolve_input;
use crate::rundir::RunDir;

pub(crate) fn load_posts(path: &Path) -> Result<(PathBuf, Vec<Post>)> {
    let path = resolve_input(path);
    let posts = read_corpus(&path).with_context(|| format!("reading corpus {}", path.display()))?;
    Ok((path, posts))
}

pub(crate) fn queries_or_default(path: Option<&Path>) -> Result<Vec<Query>> {
    match path {
        Some(p) => Ok(load_queries(resolve_input(p))?),
        None => Ok(build_default_queries()),
    }
}

/// The preprocessor used everywhere: sampling hashtags are stripped.
pub(crate) fn preprocessor(queries: &[Query]) -> Preprocessor<'static> {
    Preprocessor::new(EmojiTable::bundled(), keyword_hashtags(queries))
}

fn label_counts(posts: &[Post]) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for p in posts {
        let k = p.label.map_or_else(|| "UNLABELLED".to_string(), |l| l.to_string());
        *m.entry(k).or_insert(0) += 1;
    }
    m
}

fn source_counts(posts: &[Post]) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for p in posts {
        *m.entry(format!("{:?}", p.source).to_uppercase()).or_insert(0) += 1;
    }
    m
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Line-delimited JSON post records.
    #[arg(long)]
    pub input: PathBuf,
}

pub fn ingest(out: &Path, a: &IngestArgs) -> Result<PathBuf> {
    let (path, posts) = load_posts(&a.input)?;
    let mut run = RunDir::create(out, "ingest", json!({ "input": a.input }))?;
    run.input("corpus", &path)?;
    run.write_jsonl("corpus.jsonl", &posts)?;
    run.set_summary(json!({
        "posts": posts.len(),
        "by_source": source_counts(&posts),
        "by_label": label_counts(&posts),
    }));
    run.finish()
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub input: PathBuf,
}

pub fn filter(out: &Path, a: &FilterArgs) -> Result<PathBuf> {
    let (path, posts) = load_posts(&a.input)?;
    let (kept, report) = filter_posts_with_report(posts);
    let mut run = RunDir::create(out, "filter", json!({ "input": a.input }))?;
    run.input("corpus", &path)?;
    run.write_jsonl("corpus.jsonl", &kept)?;
    run.write_json("filter_report.json", &report)?;
    run.set_summary(serde_json::to_value(&report)?);
    run.finish()
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Posts collected with the queries, one JSON record per line.
    #[arg(long)]
    pub pool: PathBuf,
    /// Query file; the built-in query list if absent.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Fraction of multi-word-query posts to keep.
    #[arg(long, default_value_t = 0.01)]
    pub rate: f64,
    #[arg(long, default_value_t = 13)]
    pub seed: u64,
}

pub fn sample(out: &Path, a: &SampleArgs) -> Result<PathBuf> {
    let (path, posts) = load_posts(&a.pool)?;
    let queries = queries_or_default(a.queries.as_deref())?;
    let (hashtags, multiword): (Vec<&Query>, Vec<&Query>) =
        queries.iter().partition(|q| q.kind == QueryKind::Hashtag);
    let (mut hashtag_pool, mut query_pool, mut unmatched) = (Vec::new(), Vec::new(), 0usize);
    for p in posts {
        if let Some(q) = hashtags.iter().find(|q| match_query(&p, q)) {
            let mut p = p;
            p.source = Source::Hashtag;
            p.matched_query = Some(q.id.clone());
            hashtag_pool.push(p);
        } else if let Some(q) = multiword.iter().find(|q| match_query(&p, q)) {
            let mut p = p;
            p.source = Source::Keyword;
            p.matched_query = Some(q.id.clone());
            query_pool.push(p);
        } else {
            unmatched += 1;
        }
    }
    let sampled = sample_pools(&hashtag_pool, &query_pool, a.rate, a.seed)?;
    let mut run = RunDir::create(out, "sample", json!({ "pool": a.pool, "queries": a.queries, "rate": a.rate, "seed": a.seed }))?;
    run.input("pool", &path)?;
    if let Some(q) = &a.queries {
        run.input("queries", &resolve_input(q))?;
    }
    run.write_jsonl("sampled.jsonl", &sampled)?;
    run.set_summary(json!({
        "hashtag_pool": hashtag_pool.len(),
        "query_pool": query_pool.len(),
        "unmatched": unmatched,
        "sampled": sampled.len(),
    }));
    run.finish()
}

#[derive(Debug, Args)]
pub struct PruneArgs {
    /// Labelled posts used to estimate hit rates.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Precomputed hit-rate records instead of a labelled corpus.
    #[arg(long, conflicts_with = "corpus")]
    pub stats: Option<PathBuf>,
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    pub threshold: f64,
    /// Matches per query used for the estimate.
    #[arg(long, default_value_t = 1000)]
    pub first_n: usize,
}

pub fn prune(out: &Path, a: &PruneArgs) -> Result<PathBuf> {
    let queries = queries_or_default(a.queries.as_deref())?;
    let mut run = RunDir::create(
        out,
        "prune-queries",
        json!({ "corpus": a.corpus, "stats": a.stats, "queries": a.queries, "threshold": a.threshold, "first_n": a.first_n }),
    )?;
    let stats: Vec<QueryStats> = match (&a.corpus, &a.stats) {
        (Some(c), _) => {
            let (path, posts) = load_posts(c)?;
            run.input("corpus", &path)?;
            estimate_hit_rates(&queries, &posts, a.first_n)
        }
        (None, Some(s)) => {
            let path = resolve_input(s);
            run.input("stats", &path)?;
            let text = std::fs::read_to_string(&path)?;
            text.lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| serde_json::from_str(l).with_context(|| format!("parsing {}", path.display())))
                .collect::<Result<_>>()?
        }
        (None, None) => anyhow::bail!("either --corpus or --stats is required"),
    };
    let kept = prune_queries(&queries, &stats, a.threshold)?;
    let removed: Vec<&str> =
        queries.iter().filter(|q| !kept.contains(q)).map(|q| q.id.as_str()).collect();
    run.write_jsonl("queries.jsonl", &kept)?;
    run.write_json("query_stats.json", &stats)?;
    run.set_summary(json!({ "kept": kept.len(), "removed": removed }));
    run.finish()
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long, default_value = "corpus.jsonl")]
    pub corpus: PathBuf,
    /// Dev:test proportion of the randomly sampled posts.
    #[arg(long, default_value = "2:8")]
    pub ratio: SplitRatio,
    #[arg(long, default_value_t = 13)]
    pub seed: u64,
}

fn partition_counts(posts: &[Post], ids: &[String]) -> BTreeMap<String, usize> {
    let by_id: BTreeMap<&str, &Post> = posts.iter().map(|p| (p.id.as_str(), p)).collect();
    let picked: Vec<Post> = ids.iter().filter_map(|i| by_id.get(i.as_str()).map(|p| (*p).clone())).collect();
    label_counts(&picked)
}

pub fn split(out: &Path, a: &SplitArgs) -> Result<PathBuf> {
    let (path, posts) = load_posts(&a.corpus)?;
    let split: DatasetSplit = make_splits(&posts, a.ratio, a.seed)?;
    let mut run = RunDir::create(out, "split", json!({ "corpus": a.corpus, "ratio": a.ratio.to_string(), "seed": a.seed }))?;
    run.input("corpus", &path)?;
    run.write_json("split.json", &split)?;
    run.set_summary(json!({
        "train": split.train_ids.len(),
        "dev": split.dev_ids.len(),
        "test": split.test_ids.len(),
        "labels": {
            "train": partition_counts(&posts, &split.train_ids),
            "dev": partition_counts(&posts, &split.dev_ids),
            "test": partition_counts(&posts, &split.test_ids),
        }
    }));
    run.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeatureKind {
    Nrc,
    Liwc,
    Clusters,
    Pos,
    SelfDisclosure,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[arg(long, default_value = "corpus.jsonl")]
    pub corpus: PathBuf,
    #[arg(long, value_enum)]
    pub kind: FeatureKind,
    /// Lexicon or cluster file; bundled stand-ins are used when absent.
    #[arg(long)]
    pub resource: Option<PathBuf>,
    /// Number of clusters in the cluster file.
    #[arg(long, default_value_t = DEFAULT_CLUSTERS)]
    pub clusters: usize,
    /// Self-disclosure: minimum matched-token proportion, exclusive.
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    #[arg(long)]
    pub queries: Option<PathBuf>,
}

pub fn featurize(out: &Path, a: &FeaturizeArgs) -> Result<PathBuf> {
    let (path, posts) = load_posts(&a.corpus)?;
    let queries = queries_or_default(a.queries.as_deref())?;
    let pre = preprocessor(&queries);
    let mut run = RunDir::create(
        out,
        "featurize",
        json!({
            "corpus": a.corpus,
            "kind": format!("{:?}", a.kind).to_lowercase(),
            "resource": a.resource,
            "clusters": a.clusters,
            "threshold": a.threshold,
            "queries": a.queries,
        }),
    )?;
    run.input("corpus", &path)?;
    let resource = a.resource.as_deref().map(resolve_input);
    if let Some(r) = &resource {
        run.input("resource", r)?;
    }
    let tokens: Vec<Vec<String>> = posts.iter().map(|p| pre.tokens(&p.text)).collect();
    let mut rows = Vec::with_capacity(posts.len());
    match a.kind {
        FeatureKind::Nrc | FeatureKind::Liwc => {
            let lex = match (a.kind, &resource) {
                (FeatureKind::Nrc, Some(r)) => Lexicon::load_nrc(r)?,
                (FeatureKind::Nrc, None) => Lexicon::standin_nrc(),
                (_, Some(r)) => Lexicon::load_liwc(r)?,
                (_, None) => Lexicon::standin_liwc(),
            };
            for (p, t) in posts.iter().zip(&tokens) {
                let v = if a.kind == FeatureKind::Nrc { nrc_vector(t, &lex)? } else { liwc_vector(t, &lex) };
                rows.push(json!({ "id": p.id, "values": v.values }));
            }
            run.write_json("categories.json", lex.categories())?;
            run.set_summary(json!({ "posts": rows.len(), "dim": lex.dim(), "lexicon": lex.name() }));
        }
        FeatureKind::Clusters => {
            let map = match &resource {
                Some(r) => ClusterMap::load(r, a.clusters)?,
                None => ClusterMap::standin(),
            };
            for (p, t) in posts.iter().zip(&tokens) {
                rows.push(json!({ "id": p.id, "values": cluster_vector(t, &map) }));
            }
            run.set_summary(json!({ "posts": rows.len(), "dim": map.k() }));
        }
        FeatureKind::Pos => {
            let tagger = RuleTagger;
            for (p, t) in posts.iter().zip(&tokens) {
                rows.push(json!({ "id": p.id, "values": pos_ngram_features(&tagger.tag_pairs(t)) }));
            }
            run.set_summary(json!({ "posts": rows.len(), "tagger": "rule-based" }));
        }
        FeatureKind::SelfDisclosure => {
            let lex = match &resource {
                Some(r) => Lexicon::load_word_list("self_disclosure", r)?,
                None => Lexicon::standin_self_disclosure(),
            };
            let mut table: BTreeMap<String, (usize, usize)> = BTreeMap::new();
            let mut total = (0usize, 0usize);
            for (p, t) in posts.iter().zip(&tokens) {
                let flag = self_disclosure_label(t, &lex, a.threshold);
                rows.push(json!({ "id": p.id, "self_disclosure": flag }));
                if let Some(l) = p.label {
                    let e = table.entry(l.to_string()).or_default();
                    e.0 += usize::from(flag);
                    e.1 += 1;
                    total.0 += usize::from(flag);
                    total.1 += 1;
                }
            }
            let pct = |(y, n): (usize, usize)| if n == 0 { 0.0 } else { 100.0 * y as f64 / n as f64 };
            let mut by_label = serde_json::Map::new();
            for l in BraggingLabel::ALL {
                if let Some(&c) = table.get(&l.to_string()) {
                    by_label.insert(
                        l.to_string(),
                        json!({ "self_disclosure_pct": pct(c), "not_self_disclosure_pct": 100.0 - pct(c), "posts": c.1 }),
                    );
                }
            }
            run.set_summary(json!({
                "posts": rows.len(),
                "labelled_posts": total.1,
                "self_disclosure_pct": pct(total),
                "by_label": by_label,
            }));
        }
    }
    run.write_jsonl("features.jsonl", &rows)?;
    run.finish()
}
