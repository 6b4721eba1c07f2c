//! Lexicon, cluster, self-disclosure and part-of-speech features.
//!
//! Every lexicon vector holds, per category, the fraction of the post's
//! tokens that belong to the category. A token in several categories counts
//! toward each of them, so a vector can sum past one, but each entry stays
//! in `[0, 1]`.

mod clusters;
mod lexicon;
mod pos;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use clusters::{ClusterMap, DEFAULT_CLUSTERS};
pub use lexicon::{Lexicon, NRC_CATEGORIES};
pub use pos::{pos_ngram_features, PosTagger, RuleTagger};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconFeatureVector {
    pub lexicon_name: String,
    pub values: Vec<f64>,
}

/// Category proportions of `tokens` under `lexicon`.
pub fn lexicon_vector<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> LexiconFeatureVector {
    let mut values = vec![0.0; lexicon.dim()];
    if !tokens.is_empty() {
        for t in tokens {
            if let Some(cats) = lexicon.lookup(t.as_ref()) {
                for &c in cats {
                    values[c] += 1.0;
                }
            }
        }
        let n = tokens.len() as f64;
        values.iter_mut().for_each(|v| *v /= n);
    }
    LexiconFeatureVector {
        lexicon_name: lexicon.name().to_string(),
        values,
    }
}

pub fn nrc_vector<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> Result<LexiconFeatureVector> {
    if lexicon.dim() != 10 {
        return Err(Error::Config(format!(
            "NRC features need a 10-category lexicon, `{}` has {}",
            lexicon.name(),
            lexicon.dim()
        )));
    }
    Ok(lexicon_vector(tokens, lexicon))
}

pub fn liwc_vector<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> LexiconFeatureVector {
    lexicon_vector(tokens, lexicon)
}

/// Cluster distribution over the tokens that have a cluster; all zeros when
/// none do.
pub fn cluster_vector<S: AsRef<str>>(tokens: &[S], map: &ClusterMap) -> Vec<f64> {
    let mut values = vec![0.0; map.k()];
    let mut mapped = 0usize;
    for t in tokens {
        if let Some(c) = map.get(t.as_ref()) {
            values[c] += 1.0;
            mapped += 1;
        }
    }
    if mapped > 0 {
        values.iter_mut().for_each(|v| *v /= mapped as f64);
    }
    values
}

/// True when the share of tokens found in `lexicon` exceeds `threshold`.
pub fn self_disclosure_label<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon, threshold: f64) -> bool {
    if tokens.is_empty() {
        return false;
    }
    let matched = tokens.iter().filter(|t| lexicon.lookup(t.as_ref()).is_some()).count();
    matched as f64 / tokens.len() as f64 > threshold
}

/// The three lexicons that can be fused into a classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FusionLexicon {
    Nrc,
    Liwc,
    Clusters,
}

impl FusionLexicon {
    /// Default width of the projected feature vector.
    pub fn default_projection_dim(self) -> usize {
        match self {
            FusionLexicon::Nrc => 200,
            FusionLexicon::Liwc => 400,
            FusionLexicon::Clusters => 768,
        }
    }
}

impl std::str::FromStr for FusionLexicon {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nrc" => Ok(FusionLexicon::Nrc),
            "liwc" => Ok(FusionLexicon::Liwc),
            "clusters" | "cluster" => Ok(FusionLexicon::Clusters),
            _ => Err(Error::InvalidInput(format!("unknown lexicon `{s}`"))),
        }
    }
}

/// A loaded lexicon resource that maps token sequences to fixed-width vectors.
#[derive(Debug, Clone)]
pub enum Featurizer {
    Nrc(Lexicon),
    Liwc(Lexicon),
    Clusters(ClusterMap),
}

impl Featurizer {
    pub fn kind(&self) -> FusionLexicon {
        match self {
            Featurizer::Nrc(_) => FusionLexicon::Nrc,
            Featurizer::Liwc(_) => FusionLexicon::Liwc,
            Featurizer::Clusters(_) => FusionLexicon::Clusters,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Featurizer::Nrc(l) | Featurizer::Liwc(l) => l.dim(),
            Featurizer::Clusters(m) => m.k(),
        }
    }

    pub fn vector<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<f64> {
        match self {
            Featurizer::Nrc(l) | Featurizer::Liwc(l) => lexicon_vector(tokens, l).values,
            Featurizer::Clusters(m) => cluster_vector(tokens, m),
        }
    }

    /// The stand-in resource bundled with the crate.
    pub fn standin(kind: FusionLexicon) -> Self {
        match kind {
            FusionLexicon::Nrc => Featurizer::Nrc(Lexicon::standin_nrc()),
            FusionLexicon::Liwc => Featurizer::Liwc(Lexicon::standin_liwc()),
            FusionLexicon::Clusters => Featurizer::Clusters(ClusterMap::standin()),
        }
    }

    /// Loads a user-supplied resource file, or the stand-in when `path` is
    /// `None`.
    pub fn load(kind: FusionLexicon, path: Option<&std::path::Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::standin(kind));
        };
        Ok(match kind {
            FusionLexicon::Nrc => Featurizer::Nrc(Lexicon::load_nrc(path)?),
            FusionLexicon::Liwc => Featurizer::Liwc(Lexicon::load_liwc(path)?),
            FusionLexicon::Clusters => Featurizer::Clusters(ClusterMap::load(path, DEFAULT_CLUSTERS)?),
        })
    }
}
