use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Post, Source};
use crate::label::BraggingLabel;
use crate::{Error, Result};

/// Relative sizes of the dev and test partitions, e.g. `2:8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRatio {
    pub dev: u32,
    pub test: u32,
}

impl Default for SplitRatio {
    fn default() -> Self {
        SplitRatio { dev: 2, test: 8 }
    }
}

impl fmt::Display for SplitRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.dev, self.test)
    }
}

impl FromStr for SplitRatio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidInput(format!("ratio `{s}` must look like 2:8")))?;
        let parse = |x: &str| {
            x.trim()
                .parse::<u32>()
                .map_err(|_| Error::InvalidInput(format!("ratio `{s}` must look like 2:8")))
        };
        Ok(SplitRatio {
            dev: parse(a)?,
            test: parse(b)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train_ids: Vec<String>,
    pub dev_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub seed: u64,
    pub ratio: SplitRatio,
}

impl DatasetSplit {
    pub fn check_disjoint(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for id in self.train_ids.iter().chain(&self.dev_ids).chain(&self.test_ids) {
            if !seen.insert(id) {
                return Err(Error::Integrity(format!("id `{id}` appears in more than one partition")));
            }
        }
        Ok(())
    }
}

/// Splits `n` items into two parts proportional to `a:b` with the
/// largest-remainder method. Ties in the remainder go to the first part.
pub(crate) fn largest_remainder(n: usize, a: u32, b: u32) -> (usize, usize) {
    let total = u64::from(a) + u64::from(b);
    let n64 = n as u64;
    let qa = n64 * u64::from(a);
    let qb = n64 * u64::from(b);
    let (mut fa, mut fb) = ((qa / total) as usize, (qb / total) as usize);
    let (ra, rb) = (qa % total, qb % total);
    if fa + fb < n {
        if ra >= rb {
            fa += 1;
        } else {
            fb += 1;
        }
    }
    (fa, fb)
}

/// Keyword- and hashtag-sampled posts form the training set; randomly
/// sampled posts are shuffled and split into dev/test, stratified by label.
///
/// Unlabelled random posts form their own stratum. Strata are visited in
/// label order, so the output depends only on the input order and the seed.
pub fn make_splits(posts: &[Post], ratio: SplitRatio, seed: u64) -> Result<DatasetSplit> {
    if ratio.dev == 0 || ratio.test == 0 {
        return Err(Error::InvalidInput(format!("ratio components must be positive, got {ratio}")));
    }
    let mut train_ids = Vec::new();
    let mut strata: BTreeMap<Option<BraggingLabel>, Vec<String>> = BTreeMap::new();
    for p in posts {
        match p.source {
            Source::Keyword | Source::Hashtag => train_ids.push(p.id.clone()),
            Source::Random => strata.entry(p.label).or_default().push(p.id.clone()),
        }
    }
    for label in BraggingLabel::ALL {
        if !strata.contains_key(&Some(label)) {
            log::warn!("class {label} is absent from randomly sampled posts; it will not appear in dev/test");
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut dev_ids, mut test_ids) = (Vec::new(), Vec::new());
    for ids in strata.values_mut() {
        ids.shuffle(&mut rng);
        let (n_dev, _) = largest_remainder(ids.len(), ratio.dev, ratio.test);
        dev_ids.extend_from_slice(&ids[..n_dev]);
        test_ids.extend_from_slice(&ids[n_dev..]);
    }
    let split = DatasetSplit {
        train_ids,
        dev_ids,
        test_ids,
        seed,
        ratio,
    };
    split.check_disjoint()?;
    Ok(split)
}
