use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use crate::{Error, Result};

const BUNDLED: &str = include_str!("../../data/emoji.tsv");

/// Maps emoji sequences to colon-delimited names, e.g. 😀 → `:grinning_face:`.
///
/// Rows are `codepoints<TAB>name` where codepoints are space-separated hex
/// scalars. Lines starting with `#` are comments.
#[derive(Debug, Clone)]
pub struct EmojiTable {
    names: HashMap<String, String>,
    starts: HashSet<char>,
    max_chars: usize,
}

impl EmojiTable {
    /// The pinned table shipped with the crate.
    pub fn bundled() -> &'static EmojiTable {
        static TABLE: OnceLock<EmojiTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            EmojiTable::parse(BUNDLED, Path::new("data/emoji.tsv")).expect("bundled emoji table is valid")
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&std::fs::read_to_string(path)?, path)
    }

    pub fn parse(content: &str, origin: &Path) -> Result<Self> {
        let mut names = HashMap::new();
        let mut starts = HashSet::new();
        let mut max_chars = 0;
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (cps, name) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(origin, i + 1, "expected `codepoints<TAB>name`"))?;
            let seq = cps
                .split_whitespace()
                .map(|h| {
                    u32::from_str_radix(h, 16)
                        .ok()
                        .and_then(char::from_u32)
                        .ok_or_else(|| Error::parse(origin, i + 1, format!("bad codepoint `{h}`")))
                })
                .collect::<Result<String>>()?;
            let Some(first) = seq.chars().next() else {
                return Err(Error::parse(origin, i + 1, "empty codepoint sequence"));
            };
            starts.insert(first);
            max_chars = max_chars.max(seq.chars().count());
            names.insert(seq, name.trim().to_string());
        }
        Ok(EmojiTable {
            names,
            starts,
            max_chars,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, emoji: &str) -> Option<&str> {
        self.names.get(emoji).map(String::as_str)
    }

    /// Replaces every emoji with ` name `, preferring the longest sequence at
    /// each position.
    pub fn demojize(&self, text: &str) -> String {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut out = String::with_capacity(text.len());
        let mut i = 0;
        while i < chars.len() {
            let (start, c) = chars[i];
            if self.starts.contains(&c) {
                let longest = (1..=self.max_chars.min(chars.len() - i)).rev().find_map(|n| {
                    let end = chars.get(i + n).map_or(text.len(), |&(b, _)| b);
                    self.names.get(&text[start..end]).map(|name| (n, name))
                });
                if let Some((n, name)) = longest {
                    out.push(' ');
                    out.push_str(name);
                    out.push(' ');
                    i += n;
                    continue;
                }
            }
            out.push(c);
            i += 1;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table_loads() {
        let t = EmojiTable::bundled();
        assert!(t.len() > 3000);
        assert_eq!(t.name("😀"), Some(":grinning_face:"));
    }

    #[test]
    fn longest_sequence_wins() {
        let t = EmojiTable::bundled();
        // family ZWJ sequence must not split into individual people
        let s = t.demojize("hi👨\u{200d}👩\u{200d}👧!");
        assert_eq!(s.split_whitespace().collect::<Vec<_>>(), ["hi", ":family_man_woman_girl:", "!"]);
        assert_eq!(t.demojize("❤️").trim(), ":red_heart:");
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(EmojiTable::parse("1F600 no tab", Path::new("x")).is_err());
        assert!(EmojiTable::parse("ZZZZ\t:x:", Path::new("x")).is_err());
    }
}
