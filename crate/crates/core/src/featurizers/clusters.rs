use std::collections::HashMap;
use std::path::Path;

use crate::{Error, Result};

const STANDIN: &str = include_str!("../../data/clusters_standin.tsv");

pub const DEFAULT_CLUSTERS: usize = 200;

/// Word → cluster assignment over `k` clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterMap {
    k: usize,
    words: HashMap<String, usize>,
}

impl ClusterMap {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("cluster count must be positive".into()));
        }
        Ok(ClusterMap {
            k,
            words: HashMap::new(),
        })
    }

    pub fn insert(&mut self, word: &str, cluster: usize) -> Result<()> {
        if cluster >= self.k {
            return Err(Error::InvalidInput(format!("cluster {cluster} >= {}", self.k)));
        }
        self.words.insert(word.to_lowercase(), cluster);
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.words.get(word).copied()
    }

    /// Parses `word<TAB>cluster_index` lines.
    pub fn parse(content: &str, k: usize, origin: &Path) -> Result<Self> {
        let mut map = ClusterMap::new(k)?;
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (w, c) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(origin, i + 1, "expected `word<TAB>cluster`"))?;
            let c: usize = c
                .trim()
                .parse()
                .map_err(|_| Error::parse(origin, i + 1, format!("bad cluster index `{c}`")))?;
            map.insert(w.trim(), c).map_err(|e| Error::parse(origin, i + 1, e.to_string()))?;
        }
        Ok(map)
    }

    pub fn load(path: impl AsRef<Path>, k: usize) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&std::fs::read_to_string(path)?, k, path)
    }

    pub fn standin() -> Self {
        Self::parse(STANDIN, DEFAULT_CLUSTERS, Path::new("data/clusters_standin.tsv")).expect("bundled clusters")
    }
}
