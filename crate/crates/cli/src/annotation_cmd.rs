use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use braglab_core::annotation::{
    agreement_items, aggregate_all, read_log, AggregationMethod, AgreementReport, AnnotationStore, StoreOptions,
};
use braglab_core::evaluation::confusion_counts;
use braglab_core::BraggingLabel;
use clap::Args;
use serde_json::json;

use crate::corpus_cmd::load_posts;
use crate::resolve_input;
use crate::rundir::RunDir;

#[derive(Debug, Args)]
pub struct AgreementArgs {
    /// Annotation record log (one JSON record per line).
    #[arg(long)]
    pub records: PathBuf,
    /// Include singly annotated posts in the item count.
    #[arg(long)]
    pub all: bool,
}

pub fn agreement(out: &Path, a: &AgreementArgs) -> Result<PathBuf> {
    let path = resolve_input(&a.records);
    let records = read_log(&path).with_context(|| format!("reading {}", path.display()))?;
    let report = AgreementReport::compute(&records, !a.all);
    let mut run = RunDir::create(out, "agreement", json!({ "records": a.records, "multi_only": !a.all }))?;
    run.input("records", &path)?;
    run.write_json("agreement.json", &report)?;

    // First two annotators' labels per item, as a 7x7 count matrix.
    let (first, second): (Vec<BraggingLabel>, Vec<BraggingLabel>) =
        agreement_items(&records).into_values().filter(|v| v.len() >= 2).map(|v| (v[0], v[1])).unzip();
    let m = confusion_counts(&second, &first, &BraggingLabel::ALL)?;
    let mut csv = String::from("first\\second");
    for l in BraggingLabel::ALL {
        csv.push_str(&format!(",{l}"));
    }
    csv.push('\n');
    for (l, row) in BraggingLabel::ALL.iter().zip(&m) {
        csv.push_str(&l.to_string());
        for c in row {
            csv.push_str(&format!(",{c}"));
        }
        csv.push('\n');
    }
    run.write_text("annotator_pairs.csv", &csv)?;
    run.set_summary(serde_json::to_value(&report)?);
    run.finish()
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    #[arg(long)]
    pub records: PathBuf,
    /// Corpus whose labels are replaced by the aggregated ones.
    #[arg(long)]
    pub corpus: PathBuf,
}

pub fn aggregate(out: &Path, a: &AggregateArgs) -> Result<PathBuf> {
    let path = resolve_input(&a.records);
    let records = read_log(&path).with_context(|| format!("reading {}", path.display()))?;
    let (corpus_path, mut posts) = load_posts(&a.corpus)?;
    let (results, unusable) = aggregate_all(&records);
    let finals: BTreeMap<&str, Option<BraggingLabel>> =
        results.iter().map(|r| (r.post_id.as_str(), r.final_label)).collect();
    let mut unknown = Vec::new();
    for id in finals.keys() {
        if !posts.iter().any(|p| p.id == *id) {
            unknown.push(id.to_string());
        }
    }
    if !unknown.is_empty() {
        log::warn!("{} labelled posts are not in the corpus", unknown.len());
    }
    for p in &mut posts {
        p.label = finals.get(p.id.as_str()).copied().flatten();
    }
    let mut by_method: BTreeMap<String, usize> = BTreeMap::new();
    for r in &results {
        let k = match r.method {
            Some(AggregationMethod::Single) => "SINGLE",
            Some(AggregationMethod::Majority) => "MAJORITY",
            Some(AggregationMethod::Consensus) => "CONSENSUS",
            None => "NEEDS_ADJUDICATION",
        };
        *by_method.entry(k.into()).or_default() += 1;
    }
    let pending: Vec<_> = results.iter().filter(|r| r.needs_adjudication).collect();
    let mut run = RunDir::create(out, "aggregate-labels", json!({ "records": a.records, "corpus": a.corpus }))?;
    run.input("records", &path)?;
    run.input("corpus", &corpus_path)?;
    run.write_jsonl("corpus.jsonl", &posts)?;
    run.write_jsonl("aggregated.jsonl", &results)?;
    run.write_json("adjudication.json", &pending)?;
    run.set_summary(json!({
        "posts_with_records": results.len(),
        "by_method": by_method,
        "needs_adjudication": pending.len(),
        "only_not_available": unusable,
        "not_in_corpus": unknown,
    }));
    run.finish()
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Posts to annotate.
    #[arg(long, default_value = "corpus.jsonl")]
    pub corpus: PathBuf,
    /// Directory holding the record log; created if missing.
    #[arg(long, default_value = "annotations")]
    pub store: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Serve `/ui` from this directory instead of the bundled page.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
    /// Distinct annotators wanted per post.
    #[arg(long, default_value_t = 2)]
    pub target_overlap: usize,
    /// Annotator ids to register at start-up.
    #[arg(long = "annotator")]
    pub annotators: Vec<String>,
}

pub fn serve(out: &Path, a: &ServeArgs) -> Result<()> {
    let (corpus_path, posts) = load_posts(&a.corpus)?;
    let store = AnnotationStore::open(posts, &a.store, StoreOptions { target_overlap: a.target_overlap })?;
    for id in &a.annotators {
        store.register_annotator(id)?;
    }
    let mut run = RunDir::create(
        out,
        "serve",
        json!({ "corpus": a.corpus, "store": a.store, "addr": a.addr.to_string(), "ui_dir": a.ui_dir, "target_overlap": a.target_overlap }),
    )?;
    run.input("corpus", &corpus_path)?;
    let dir = run.finish()?;
    log::info!("run manifest in {}", dir.display());
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(braglab_server::serve(Arc::new(store), a.addr, a.ui_dir.clone()))?;
    Ok(())
}
