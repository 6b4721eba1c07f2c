use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::{Error, Result};

/// Canonical NRC category order.
pub const NRC_CATEGORIES: [&str; 10] = [
    "anger",
    "anticipation",
    "disgust",
    "fear",
    "joy",
    "negative",
    "positive",
    "sadness",
    "surprise",
    "trust",
];

const STANDIN_LIWC: &str = include_str!("../../data/liwc_standin.dic");
const STANDIN_NRC: &str = include_str!("../../data/nrc_standin.tsv");
const STANDIN_SELF_DISCLOSURE: &str = include_str!("../../data/self_disclosure_standin.txt");

/// A word-category dictionary. Entries ending in `*` are prefix stems.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    name: String,
    categories: Vec<String>,
    exact: HashMap<String, Vec<usize>>,
    stems: HashMap<String, Vec<usize>>,
}

impl Lexicon {
    pub fn new(name: impl Into<String>, categories: Vec<String>) -> Self {
        Lexicon {
            name: name.into(),
            categories,
            exact: HashMap::new(),
            stems: HashMap::new(),
        }
    }

    /// Adds `entry` (a word, or a stem ending in `*`) to the given category
    /// indices.
    pub fn insert(&mut self, entry: &str, cats: impl IntoIterator<Item = usize>) -> Result<()> {
        let entry = entry.to_lowercase();
        let mut cats: Vec<usize> = cats.into_iter().collect();
        if let Some(&bad) = cats.iter().find(|&&c| c >= self.categories.len()) {
            return Err(Error::InvalidInput(format!(
                "category index {bad} out of range for `{}`",
                self.name
            )));
        }
        if cats.is_empty() {
            return Err(Error::InvalidInput(format!("entry `{entry}` has no categories")));
        }
        let (map, key) = match entry.strip_suffix('*') {
            Some(stem) if !stem.is_empty() => (&mut self.stems, stem.to_string()),
            _ => (&mut self.exact, entry),
        };
        let slot = map.entry(key).or_default();
        slot.append(&mut cats);
        slot.sort_unstable();
        slot.dedup();
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn dim(&self) -> usize {
        self.categories.len()
    }

    pub fn len(&self) -> usize {
        self.exact.len() + self.stems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Categories of `token`: an exact entry if present, else the longest
    /// matching stem.
    pub fn lookup(&self, token: &str) -> Option<&[usize]> {
        if let Some(c) = self.exact.get(token) {
            return Some(c);
        }
        if self.stems.is_empty() {
            return None;
        }
        token
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(token.len()))
            .rev()
            .find_map(|end| self.stems.get(&token[..end]))
            .map(Vec::as_slice)
    }

    /// Entries as `(entry, categories)` pairs, stems with a trailing `*`.
    pub fn entries(&self) -> impl Iterator<Item = (String, &[usize])> {
        self.exact
            .iter()
            .map(|(w, c)| (w.clone(), c.as_slice()))
            .chain(self.stems.iter().map(|(s, c)| (format!("{s}*"), c.as_slice())))
    }

    /// Parses the `%`-delimited dictionary format:
    ///
    /// ```text
    /// %
    /// 1   posemo
    /// 2   negemo
    /// %
    /// happi*  1
    /// sad     2
    /// ```
    ///
    /// Category ids need not be contiguous; they are mapped to indices in the
    /// order they are declared. A field like `(02 134)126/253` contributes the
    /// ids outside the parentheses.
    pub fn parse_liwc(name: &str, content: &str, origin: &Path) -> Result<Self> {
        let mut lines = content.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, l)) if l.trim() == "%" => {}
            Some((i, _)) => return Err(Error::parse(origin, i + 1, "dictionary must start with `%`")),
            None => return Err(Error::parse(origin, 1, "empty dictionary")),
        }
        let mut ids: BTreeMap<String, usize> = BTreeMap::new();
        let mut categories = Vec::new();
        let mut header_closed = false;
        for (i, line) in lines.by_ref() {
            if line.trim() == "%" {
                header_closed = true;
                break;
            }
            let mut parts = line.split_whitespace();
            let (Some(id), Some(cat), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::parse(origin, i + 1, "expected `id name` in category header"));
            };
            if ids.insert(id.to_string(), categories.len()).is_some() {
                return Err(Error::parse(origin, i + 1, format!("duplicate category id `{id}`")));
            }
            categories.push(cat.to_string());
        }
        if !header_closed {
            return Err(Error::parse(origin, content.lines().count(), "unterminated category header"));
        }
        let mut lex = Lexicon::new(name, categories);
        for (i, line) in lines {
            let (entry, rest): (&str, Vec<&str>) = if line.contains('\t') {
                let mut f = line.split('\t');
                let entry = f.next().unwrap_or_default().trim();
                (entry, f.flat_map(str::split_whitespace).collect())
            } else {
                let mut f = line.split_whitespace();
                (f.next().unwrap_or_default(), f.collect())
            };
            if entry.is_empty() || rest.is_empty() {
                return Err(Error::parse(origin, i + 1, "expected `entry id [id ...]`"));
            }
            let mut cats = Vec::new();
            for field in rest {
                let field = match field.rfind(')') {
                    Some(p) => &field[p + 1..],
                    None => field,
                };
                if field.is_empty() || field.starts_with('(') {
                    continue;
                }
                for id in field.split('/') {
                    let idx = ids
                        .get(id)
                        .ok_or_else(|| Error::parse(origin, i + 1, format!("unknown category id `{id}`")))?;
                    cats.push(*idx);
                }
            }
            lex.insert(entry, cats).map_err(|e| Error::parse(origin, i + 1, e.to_string()))?;
        }
        Ok(lex)
    }

    pub fn load_liwc(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse_liwc("liwc", &std::fs::read_to_string(path)?, path)
    }

    /// Parses `word<TAB>category<TAB>0|1` triples into the ten NRC categories.
    pub fn parse_nrc(content: &str, origin: &Path) -> Result<Self> {
        let mut lex = Lexicon::new("nrc", NRC_CATEGORIES.iter().map(|s| s.to_string()).collect());
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let [word, cat, flag] = f[..] else {
                return Err(Error::parse(origin, i + 1, "expected `word<TAB>category<TAB>0|1`"));
            };
            let idx = NRC_CATEGORIES
                .iter()
                .position(|c| *c == cat.trim())
                .ok_or_else(|| Error::parse(origin, i + 1, format!("unknown NRC category `{cat}`")))?;
            match flag.trim() {
                "1" => lex.insert(word.trim(), [idx])?,
                "0" => {}
                other => return Err(Error::parse(origin, i + 1, format!("flag must be 0 or 1, got `{other}`"))),
            }
        }
        Ok(lex)
    }

    pub fn load_nrc(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse_nrc(&std::fs::read_to_string(path)?, path)
    }

    /// One entry per line, single category.
    pub fn parse_word_list(name: &str, content: &str) -> Result<Self> {
        let mut lex = Lexicon::new(name, vec![name.to_string()]);
        for w in content.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            lex.insert(w, [0])?;
        }
        Ok(lex)
    }

    pub fn load_word_list(name: &str, path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_word_list(name, &std::fs::read_to_string(path)?)
    }

    /// Open stand-in for the LIWC 2015 dictionary: same 93 category ids, a
    /// small hand-written vocabulary.
    pub fn standin_liwc() -> Self {
        Self::parse_liwc("liwc", STANDIN_LIWC, Path::new("data/liwc_standin.dic")).expect("bundled dictionary")
    }

    pub fn standin_nrc() -> Self {
        Self::parse_nrc(STANDIN_NRC, Path::new("data/nrc_standin.tsv")).expect("bundled NRC list")
    }

    pub fn standin_self_disclosure() -> Self {
        Self::parse_word_list("self_disclosure", STANDIN_SELF_DISCLOSURE).expect("bundled word list")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_beats_stem_and_longest_stem_wins() {
        let mut l = Lexicon::new("t", vec!["a".into(), "b".into(), "c".into()]);
        l.insert("happy", [0]).unwrap();
        l.insert("ha*", [1]).unwrap();
        l.insert("happi*", [2]).unwrap();
        assert_eq!(l.lookup("happy"), Some(&[0][..]));
        assert_eq!(l.lookup("happiness"), Some(&[2][..]));
        assert_eq!(l.lookup("hat"), Some(&[1][..]));
        assert_eq!(l.lookup("h"), None);
        assert!(l.insert("x", [3]).is_err());
    }

    #[test]
    fn parses_liwc_format() {
        let dic = "%\n1\tposemo\n31\tnegemo\n%\nhappi*\t1\nsad\t31\nlike\t(02 134)1/31\n";
        let l = Lexicon::parse_liwc("liwc", dic, Path::new("x.dic")).unwrap();
        assert_eq!(l.categories(), ["posemo", "negemo"]);
        assert_eq!(l.lookup("happiness"), Some(&[0][..]));
        assert_eq!(l.lookup("sad"), Some(&[1][..]));
        assert_eq!(l.lookup("like"), Some(&[0, 1][..]));
    }

    #[test]
    fn malformed_liwc_reports_line() {
        let dic = "%\n1 posemo\n%\nhappy 1\nsad 7\n";
        match Lexicon::parse_liwc("liwc", dic, Path::new("x.dic")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        assert!(Lexicon::parse_liwc("liwc", "1 posemo\n", Path::new("x")).is_err());
        assert!(Lexicon::parse_liwc("liwc", "%\n1 posemo\n", Path::new("x")).is_err());
    }

    #[test]
    fn nrc_parsing() {
        let l = Lexicon::parse_nrc("joyful\tjoy\t1\njoyful\tanger\t0\nbad\tnegative\t1\n", Path::new("n")).unwrap();
        assert_eq!(l.dim(), 10);
        assert_eq!(l.lookup("joyful"), Some(&[4][..]));
        assert!(Lexicon::parse_nrc("x\tjoyous\t1\n", Path::new("n")).is_err());
        assert!(Lexicon::parse_nrc("x\tjoy\t2\n", Path::new("n")).is_err());
    }

    #[test]
    fn bundled_standins() {
        let liwc = Lexicon::standin_liwc();
        assert_eq!(liwc.dim(), 93);
        assert!(liwc.categories().iter().any(|c| c == "posemo"));
        assert!(liwc.lookup("happiness").is_some());
        assert_eq!(Lexicon::standin_nrc().dim(), 10);
        assert!(Lexicon::standin_self_disclosure().lookup("my").is_some());
    }
}
