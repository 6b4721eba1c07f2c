use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use braglab_core::analysis::{
    feature_label_correlation, popularity_correlation, type_popularity_stats, unigram_distributions, Control,
    PopularityTarget,
};
use braglab_core::featurizers::{
    cluster_vector, liwc_vector, nrc_vector, pos_ngram_features, ClusterMap, Lexicon, PosTagger, RuleTagger,
    DEFAULT_CLUSTERS,
};
use braglab_core::BraggingLabel;
use clap::{Args, Subcommand, ValueEnum};
use serde_json::json;

use crate::corpus_cmd::{load_posts, preprocessor, queries_or_default};
use crate::resolve_input;
use crate::rundir::RunDir;

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Rank features by Pearson correlation with bragging (or with each type).
    Correlate(CorrelateArgs),
    /// Partial correlation of engagement with bragging, and per-type favorites.
    Popularity(PopularityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum FeatureSet {
    Unigrams,
    Liwc,
    Nrc,
    Clusters,
    Pos,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[arg(long, default_value = "corpus.jsonl")]
    pub corpus: PathBuf,
    /// Feature groups, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "unigrams")]
    pub features: Vec<FeatureSet>,
    /// One-vs-rest correlation per bragging type, among bragging posts.
    #[arg(long)]
    pub by_type: bool,
    /// Significance threshold; features with p at or above it are dropped.
    #[arg(long, default_value_t = 0.01)]
    pub p: f64,
    /// Minimum share of posts a unigram must occur in.
    #[arg(long, default_value_t = 0.005)]
    pub min_doc_fraction: f64,
    /// Rows kept per ranking; 0 keeps all.
    #[arg(long, default_value_t = 0)]
    pub top: usize,
    #[arg(long)]
    pub liwc: Option<PathBuf>,
    #[arg(long)]
    pub nrc: Option<PathBuf>,
    #[arg(long)]
    pub clusters: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_CLUSTERS)]
    pub cluster_count: usize,
    #[arg(long)]
    pub queries: Option<PathBuf>,
}

fn named(values: &[f64], names: &[String]) -> BTreeMap<String, f64> {
    names.iter().zip(values).map(|(n, v)| (n.clone(), *v)).collect()
}

pub fn correlate(out: &Path, a: &CorrelateArgs) -> Result<PathBuf> {
    let (path, posts) = load_posts(&a.corpus)?;
    let queries = queries_or_default(a.queries.as_deref())?;
    let pre = preprocessor(&queries);
    let labelled: Vec<_> = posts.iter().filter_map(|p| p.label.map(|l| (p, l))).collect();
    if labelled.is_empty() {
        bail!("the corpus has no labelled posts");
    }
    let mut features = a.features.clone();
    features.sort();
    features.dedup();
    let mut run = RunDir::create(
        out,
        "analyze-correlate",
        json!({
            "corpus": a.corpus, "features": features.iter().map(|f| format!("{f:?}").to_lowercase()).collect::<Vec<_>>(),
            "by_type": a.by_type, "p": a.p, "min_doc_fraction": a.min_doc_fraction, "top": a.top,
            "liwc": a.liwc, "nrc": a.nrc, "clusters": a.clusters, "cluster_count": a.cluster_count, "queries": a.queries,
        }),
    )?;
    run.input("corpus", &path)?;
    let docs: Vec<Vec<String>> = labelled.iter().map(|(p, _)| pre.tokens(&p.text)).collect();
    let mut rows: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new(); docs.len()];
    for f in &features {
        match f {
            FeatureSet::Unigrams => {
                for (row, d) in rows.iter_mut().zip(unigram_distributions(&docs, a.min_doc_fraction)) {
                    row.extend(d);
                }
            }
            FeatureSet::Liwc | FeatureSet::Nrc => {
                let lex = match (f, &a.liwc, &a.nrc) {
                    (FeatureSet::Liwc, Some(p), _) => Lexicon::load_liwc(resolve_input(p))?,
                    (FeatureSet::Liwc, None, _) => Lexicon::standin_liwc(),
                    (_, _, Some(p)) => Lexicon::load_nrc(resolve_input(p))?,
                    _ => Lexicon::standin_nrc(),
                };
                let names: Vec<String> = lex.categories().iter().map(|c| c.to_uppercase()).collect();
                for (row, d) in rows.iter_mut().zip(&docs) {
                    let v = if *f == FeatureSet::Nrc { nrc_vector(d, &lex)?.values } else { liwc_vector(d, &lex).values };
                    row.extend(named(&v, &names));
                }
            }
            FeatureSet::Clusters => {
                let map = match &a.clusters {
                    Some(p) => ClusterMap::load(resolve_input(p), a.cluster_count)?,
                    None => ClusterMap::standin(),
                };
                let names: Vec<String> = (0..map.k()).map(|k| format!("cluster_{k}")).collect();
                for (row, d) in rows.iter_mut().zip(&docs) {
                    row.extend(named(&cluster_vector(d, &map), &names));
                }
            }
            FeatureSet::Pos => {
                for (row, d) in rows.iter_mut().zip(&docs) {
                    row.extend(pos_ngram_features(&RuleTagger.tag_pairs(d)));
                }
            }
        }
    }
    let truncate = |mut r: braglab_core::analysis::CorrelationRanking| {
        if a.top > 0 {
            r.results.truncate(a.top);
        }
        r
    };
    let mut summary = serde_json::Map::new();
    if a.by_type {
        let brag: Vec<usize> = (0..labelled.len()).filter(|&i| labelled[i].1.is_bragging()).collect();
        let feats: Vec<BTreeMap<String, f64>> = brag.iter().map(|&i| rows[i].clone()).collect();
        for t in BraggingLabel::BRAGGING_TYPES {
            let y: Vec<bool> = brag.iter().map(|&i| labelled[i].1 == t).collect();
            if !y.iter().any(|&b| b) {
                log::warn!("no {t} posts; skipped");
                continue;
            }
            let ranking = truncate(feature_label_correlation(&feats, &y, a.p)?);
            run.write_text(&format!("correlations-{t}.csv"), &ranking.to_csv())?;
            summary.insert(t.to_string(), json!({ "significant": ranking.results.len(), "posts": y.iter().filter(|&&b| b).count() }));
        }
    } else {
        let y: Vec<bool> = labelled.iter().map(|(_, l)| l.is_bragging()).collect();
        let ranking = truncate(feature_label_correlation(&rows, &y, a.p)?);
        run.write_text("correlations.csv", &ranking.to_csv())?;
        run.write_json("skipped_features.json", &ranking.skipped)?;
        summary.insert("significant".into(), json!(ranking.results.len()));
        summary.insert("posts".into(), json!(labelled.len()));
    }
    run.set_summary(summary.into());
    run.finish()
}

fn parse_range(s: &str) -> Result<RangeInclusive<u64>, String> {
    let (lo, hi) = s.split_once('-').ok_or_else(|| format!("range `{s}` must look like 100-500"))?;
    let lo: u64 = lo.trim().parse().map_err(|_| format!("bad range start in `{s}`"))?;
    let hi: u64 = hi.trim().parse().map_err(|_| format!("bad range end in `{s}`"))?;
    if lo > hi {
        return Err(format!("empty range `{s}`"));
    }
    Ok(lo..=hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ControlArg {
    Followers,
    Friends,
}

#[derive(Debug, Args)]
pub struct PopularityArgs {
    #[arg(long, default_value = "corpus.jsonl")]
    pub corpus: PathBuf,
    /// favorites or retweets.
    #[arg(long, default_value = "favorites")]
    pub target: PopularityTarget,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "followers,friends")]
    pub controls: Vec<ControlArg>,
    /// Follower range for the per-type table, e.g. 100-500.
    #[arg(long, value_parser = parse_range, default_value = "100-500")]
    pub followers: RangeInclusive<u64>,
    /// Friend range for the per-type table, e.g. 500-1000.
    #[arg(long, value_parser = parse_range, default_value = "500-1000")]
    pub friends: RangeInclusive<u64>,
}

pub fn popularity(out: &Path, a: &PopularityArgs) -> Result<PathBuf> {
    let (path, posts) = load_posts(&a.corpus)?;
    let controls: Vec<Control> = a
        .controls
        .iter()
        .map(|c| match c {
            ControlArg::Followers => Control::Followers,
            ControlArg::Friends => Control::Friends,
        })
        .collect();
    let mut run = RunDir::create(
        out,
        "analyze-popularity",
        json!({
            "corpus": a.corpus, "target": a.target, "controls": controls,
            "followers": [a.followers.start(), a.followers.end()],
            "friends": [a.friends.start(), a.friends.end()],
        }),
    )?;
    run.input("corpus", &path)?;
    let report = popularity_correlation(&posts, a.target, &controls)?;
    let types = type_popularity_stats(&posts, a.followers.clone(), a.friends.clone());
    let doc = json!({ "correlation": report, "by_type": types });
    run.write_json("popularity.json", &doc)?;
    run.set_summary(json!({ "r_partial": report.r_partial, "p_value": report.p_value, "n": report.n, "typed_posts": types.n_posts }));
    run.finish()
}

pub fn analyze(out: &Path, cmd: &AnalyzeCommand) -> Result<PathBuf> {
    match cmd {
        AnalyzeCommand::Correlate(a) => correlate(out, a),
        AnalyzeCommand::Popularity(a) => popularity(out, a),
    }
}
