use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use parking_lot::RwLock;

use super::{aggregate, aggregate_all, AgreementReport, AggregationResult, AnnotationRecord, CONSENSUS_ANNOTATOR};
use crate::corpus::Post;
use crate::{Error, Result};

/// File name of the record log inside a store directory.
pub const RECORD_LOG: &str = "records.jsonl";
const ANNOTATOR_LOG: &str = "annotators.txt";

#[derive(Debug, Clone)]
pub struct StoreOptions {
    /// How many distinct annotators a post should get before it stops being
    /// offered ahead of unseen posts.
    pub target_overlap: usize,
}

impl Default for StoreOptions {
    fn default() -> Self {
        StoreOptions { target_overlap: 2 }
    }
}

#[derive(Debug, Default)]
struct Inner {
    records: Vec<AnnotationRecord>,
    keys: HashSet<(String, String, u32)>,
    by_post: HashMap<String, Vec<usize>>,
    annotators: BTreeSet<String>,
    log: Option<File>,
    annotator_log: Option<File>,
}

impl Inner {
    fn index(&mut self, record: AnnotationRecord) -> Result<()> {
        let key = (record.post_id.clone(), record.annotator_id.clone(), record.round);
        if !self.keys.insert(key) {
            return Err(Error::Conflict(format!(
                "post `{}` already has a round {} label from `{}`",
                record.post_id, record.round, record.annotator_id
            )));
        }
        self.by_post.entry(record.post_id.clone()).or_default().push(self.records.len());
        self.records.push(record);
        Ok(())
    }

    fn post_records(&self, post_id: &str) -> Vec<AnnotationRecord> {
        self.by_post
            .get(post_id)
            .map(|ix| ix.iter().map(|&i| self.records[i].clone()).collect())
            .unwrap_or_default()
    }
}

/// Thread-safe annotation state backed by an append-only record log.
///
/// Every accepted record is written and synced to disk before it becomes
/// visible to readers, so a crash never leaves an acknowledged label behind.
/// Reads take a consistent snapshot under a shared lock.
pub struct AnnotationStore {
    posts: Vec<Post>,
    post_index: HashMap<String, usize>,
    options: StoreOptions,
    dir: Option<PathBuf>,
    inner: RwLock<Inner>,
}

impl AnnotationStore {
    /// A store that keeps everything in memory.
    pub fn in_memory(posts: Vec<Post>, options: StoreOptions) -> Result<Self> {
        Self::build(posts, options, None)
    }

    /// Opens (or creates) a store directory, replaying its record log.
    pub fn open(posts: Vec<Post>, dir: impl AsRef<Path>, options: StoreOptions) -> Result<Self> {
        std::fs::create_dir_all(dir.as_ref())?;
        Self::build(posts, options, Some(dir.as_ref().to_path_buf()))
    }

    fn build(posts: Vec<Post>, options: StoreOptions, dir: Option<PathBuf>) -> Result<Self> {
        let mut post_index = HashMap::new();
        for (i, p) in posts.iter().enumerate() {
            if post_index.insert(p.id.clone(), i).is_some() {
                return Err(Error::Integrity(format!("duplicate post id `{}` in task queue", p.id)));
            }
        }
        let mut inner = Inner::default();
        if let Some(dir) = &dir {
            let log_path = dir.join(RECORD_LOG);
            for record in read_log(&log_path)? {
                if !post_index.contains_key(&record.post_id) {
                    log::warn!("record for unknown post `{}` in {}", record.post_id, log_path.display());
                }
                inner.annotators.insert(record.annotator_id.clone());
                inner.index(record).map_err(|e| Error::Integrity(e.to_string()))?;
            }
            let ann_path = dir.join(ANNOTATOR_LOG);
            if ann_path.exists() {
                for line in std::fs::read_to_string(&ann_path)?.lines() {
                    let id = line.trim();
                    if !id.is_empty() {
                        inner.annotators.insert(id.to_string());
                    }
                }
            }
            inner.log = Some(OpenOptions::new().create(true).append(true).open(&log_path)?);
            inner.annotator_log = Some(OpenOptions::new().create(true).append(true).open(&ann_path)?);
        }
        Ok(AnnotationStore {
            posts,
            post_index,
            options,
            dir,
            inner: RwLock::new(inner),
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn post(&self, id: &str) -> Option<&Post> {
        self.post_index.get(id).map(|&i| &self.posts[i])
    }

    /// Registers an annotator. Returns false if the id was already known.
    pub fn register_annotator(&self, id: &str) -> Result<bool> {
        let id = id.trim();
        if id.is_empty() || id.contains(char::is_whitespace) {
            return Err(Error::InvalidInput(format!("invalid annotator id `{id}`")));
        }
        let mut inner = self.inner.write();
        if inner.annotators.contains(id) {
            return Ok(false);
        }
        if let Some(f) = inner.annotator_log.as_mut() {
            writeln!(f, "{id}")?;
            f.sync_data()?;
        }
        inner.annotators.insert(id.to_string());
        Ok(true)
    }

    pub fn annotators(&self) -> Vec<String> {
        self.inner.read().annotators.iter().cloned().collect()
    }

    fn check_annotator(inner: &Inner, id: &str) -> Result<()> {
        if id == CONSENSUS_ANNOTATOR || inner.annotators.contains(id) {
            Ok(())
        } else {
            Err(Error::UnknownAnnotator(id.to_string()))
        }
    }

    /// The next post for `annotator`: tied disagreements first, then posts
    /// short of the target overlap, then unseen posts, each in queue order.
    pub fn next_task(&self, annotator: &str) -> Result<Option<Post>> {
        let inner = self.inner.read();
        Self::check_annotator(&inner, annotator)?;
        let mut best: Option<(u8, usize)> = None;
        for (i, post) in self.posts.iter().enumerate() {
            let recs = inner.post_records(&post.id);
            if recs.iter().any(|r| r.annotator_id == annotator || r.is_consensus()) {
                continue;
            }
            let voters: BTreeSet<&str> =
                recs.iter().filter(|r| r.label.label().is_some()).map(|r| r.annotator_id.as_str()).collect();
            let priority = match voters.len() {
                0 => 2,
                n => match aggregate(&post.id, &recs) {
                    Ok(a) if a.needs_adjudication && n < 3 => 0,
                    Ok(a) if a.needs_adjudication => continue,
                    _ if n < self.options.target_overlap => 1,
                    _ => continue,
                },
            };
            if best.is_none_or(|(p, _)| priority < p) {
                best = Some((priority, i));
                if priority == 0 {
                    break;
                }
            }
        }
        Ok(best.map(|(_, i)| self.posts[i].clone()))
    }

    /// Validates, persists and indexes one record.
    pub fn submit(&self, record: AnnotationRecord) -> Result<()> {
        if !self.post_index.contains_key(&record.post_id) {
            return Err(Error::NotFound(format!("post `{}`", record.post_id)));
        }
        let mut inner = self.inner.write();
        Self::check_annotator(&inner, &record.annotator_id)?;
        let key = (record.post_id.clone(), record.annotator_id.clone(), record.round);
        if inner.keys.contains(&key) {
            return Err(Error::Conflict(format!(
                "post `{}` already has a round {} label from `{}`",
                record.post_id, record.round, record.annotator_id
            )));
        }
        if let Some(f) = inner.log.as_mut() {
            let mut line = serde_json::to_vec(&record)?;
            line.push(b'\n');
            f.write_all(&line)?;
            f.sync_data()?;
        }
        inner.index(record)
    }

    pub fn records(&self) -> Vec<AnnotationRecord> {
        self.inner.read().records.clone()
    }

    pub fn records_for(&self, post_id: &str) -> Vec<AnnotationRecord> {
        self.inner.read().post_records(post_id)
    }

    pub fn agreement(&self, multi_only: bool) -> AgreementReport {
        AgreementReport::compute(&self.inner.read().records, multi_only)
    }

    pub fn aggregated(&self) -> Vec<AggregationResult> {
        aggregate_all(&self.inner.read().records).0
    }

    /// Posts whose votes have no strict plurality and no consensus record.
    pub fn adjudication_queue(&self) -> Vec<AggregationResult> {
        self.aggregated().into_iter().filter(|a| a.needs_adjudication).collect()
    }

    /// Per-label counts of the aggregated labels.
    pub fn label_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for a in self.aggregated() {
            if let Some(l) = a.final_label {
                *counts.entry(l.as_str().to_string()).or_default() += 1;
            }
        }
        counts
    }
}

/// Reads a record log. A final line without its newline is what an
/// interrupted append leaves behind; it is dropped with a warning if it does
/// not parse. Any other bad line is an error.
pub fn read_log(path: &Path) -> Result<Vec<AnnotationRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let content = std::fs::read_to_string(path)?;
    let complete = content.ends_with('\n');
    let lines: Vec<&str> = content.lines().collect();
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<AnnotationRecord>(line) {
            Ok(r) => out.push(r),
            Err(_) if i + 1 == lines.len() && !complete => {
                log::warn!("dropping truncated last line of {}", path.display());
            }
            Err(e) => return Err(Error::parse(path, i + 1, e.to_string())),
        }
    }
    Ok(out)
}
