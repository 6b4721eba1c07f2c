//! Turning preprocessed token sequences into fixed-width id tensors.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader};
use std::path::Path;

use candle_core::{DType, Device, Tensor};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";

/// Word-level vocabulary with the four special tokens at ids 0 to 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(tokens: Vec<String>) -> Self {
        Vocabulary::from_tokens(tokens)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

impl Vocabulary {
    /// Tokens seen at least `min_count` times, ordered by descending count
    /// and then alphabetically.
    pub fn build<'a>(docs: impl IntoIterator<Item = &'a [String]>, min_count: usize) -> Self {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in docs {
            for t in doc {
                *counts.entry(t.as_str()).or_default() += 1;
            }
        }
        let mut words: Vec<(&str, usize)> = counts.into_iter().filter(|&(_, c)| c >= min_count.max(1)).collect();
        words.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let tokens = [PAD, UNK, BOS, EOS]
            .into_iter()
            .chain(words.into_iter().map(|(w, _)| w).filter(|w| ![PAD, UNK, BOS, EOS].contains(w)))
            .map(String::from)
            .collect();
        Self::from_tokens(tokens)
    }

    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocabulary { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(1)
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Maps token sequences to ids, either with a word vocabulary or with a
/// pretrained subword tokenizer.
pub enum InputEncoder {
    Words { vocab: Vocabulary, specials: bool },
    Pretrained { tokenizer: Box<tokenizers::Tokenizer>, pad: u32 },
}

impl InputEncoder {
    pub fn words(vocab: Vocabulary, specials: bool) -> Self {
        InputEncoder::Words { vocab, specials }
    }

    pub fn pretrained(path: &Path, pad: u32) -> Result<Self> {
        let tokenizer = tokenizers::Tokenizer::from_file(path).map_err(|e| Error::Tokenizer(e.to_string()))?;
        Ok(InputEncoder::Pretrained {
            tokenizer: Box::new(tokenizer),
            pad,
        })
    }

    pub fn pad_id(&self) -> u32 {
        match self {
            InputEncoder::Words { .. } => 0,
            InputEncoder::Pretrained { pad, .. } => *pad,
        }
    }

    /// Ids for one post, truncated to `max_len`. Sequences that would be
    /// empty become a single unknown token. With special tokens, the final
    /// end marker survives truncation.
    pub fn encode(&self, tokens: &[String], max_len: usize) -> Result<Vec<u32>> {
        let mut ids = match self {
            InputEncoder::Words { vocab, specials } => {
                let mut ids: Vec<u32> = tokens.iter().map(|t| vocab.id(t)).collect();
                if ids.is_empty() {
                    ids.push(1);
                }
                if *specials {
                    ids.insert(0, 2);
                    ids.push(3);
                }
                ids
            }
            InputEncoder::Pretrained { tokenizer, .. } => {
                let enc = tokenizer.encode(tokens.join(" "), true).map_err(|e| Error::Tokenizer(e.to_string()))?;
                enc.get_ids().to_vec()
            }
        };
        let special_end = match self {
            InputEncoder::Words { specials, .. } => *specials,
            InputEncoder::Pretrained { tokenizer, .. } => {
                tokenizer.get_post_processor().is_some() && ids.len() > 1
            }
        };
        if ids.len() > max_len {
            let last = *ids.last().unwrap();
            ids.truncate(max_len);
            if special_end {
                ids[max_len - 1] = last;
            }
        }
        Ok(ids)
    }
}

/// A padded batch. Every batch is padded to the same `max_len`, so the
/// numeric path for a post does not depend on what it is batched with.
pub struct Batch {
    pub ids: Tensor,
    pub mask: Tensor,
    pub features: Option<Tensor>,
    pub targets: Option<Tensor>,
}

pub fn make_batch(
    ids: &[&[u32]],
    max_len: usize,
    pad: u32,
    features: Option<&[&[f64]]>,
    targets: Option<&[u32]>,
    dtype: DType,
) -> Result<Batch> {
    let b = ids.len();
    let mut flat = Vec::with_capacity(b * max_len);
    let mut mask = Vec::with_capacity(b * max_len);
    for row in ids {
        if row.len() > max_len {
            return Err(Error::InvalidInput(format!("sequence of {} ids exceeds {max_len}", row.len())));
        }
        flat.extend_from_slice(row);
        flat.extend(std::iter::repeat_n(pad, max_len - row.len()));
        mask.extend(std::iter::repeat_n(1.0f64, row.len()));
        mask.extend(std::iter::repeat_n(0.0f64, max_len - row.len()));
    }
    let dev = Device::Cpu;
    let features = match features {
        None => None,
        Some(rows) => {
            let dim = rows.first().map_or(0, |r| r.len());
            let data: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
            Some(Tensor::from_vec(data, (b, dim), &dev)?.to_dtype(dtype)?)
        }
    };
    Ok(Batch {
        ids: Tensor::from_vec(flat, (b, max_len), &dev)?,
        mask: Tensor::from_vec(mask, (b, max_len), &dev)?.to_dtype(dtype)?,
        features,
        targets: targets.map(|t| Tensor::new(t, &dev)).transpose()?,
    })
}

/// Reads GloVe-style text vectors (`word v1 v2 ...`) for the words in
/// `vocab`. Rows of words without a vector stay zero, as do the special
/// tokens. Returns the `[vocab, dim]` matrix and the number of words found.
pub fn load_word_vectors(path: &Path, vocab: &Vocabulary, dim: usize) -> Result<(Vec<f64>, usize)> {
    let mut matrix = vec![0.0; vocab.len() * dim];
    let mut found = 0;
    let reader = BufReader::new(std::fs::File::open(path)?);
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let mut parts = line.split(' ');
        let Some(word) = parts.next() else { continue };
        let Some(id) = vocab.get(word) else { continue };
        if id < 4 {
            continue;
        }
        let values: std::result::Result<Vec<f64>, _> = parts.filter(|s| !s.is_empty()).map(str::parse).collect();
        let values = values.map_err(|e| braglab_core::Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            message: e.to_string(),
        })?;
        if values.len() != dim {
            return Err(braglab_core::Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!("expected {dim} values, found {}", values.len()),
            }
            .into());
        }
        let row = id as usize * dim;
        if matrix[row..row + dim].iter().all(|&v| v == 0.0) {
            found += 1;
        }
        matrix[row..row + dim].copy_from_slice(&values);
    }
    Ok((matrix, found))
}
