//! Run directories and their manifests.
//!
//! Every subcommand writes its artifacts to
//! `<out>/<subcommand>-<timestamp>-<hash>/`, where `hash` is a short digest
//! of the resolved parameters. `manifest.json` records the tool version, the
//! parameters, digests of the inputs and of every artifact written, and no
//! timestamp, so identical runs produce identical manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_digest(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path).with_context(|| format!("reading {}", path.display()))?))
}

pub struct RunDir {
    path: PathBuf,
    subcommand: String,
    params: Value,
    inputs: BTreeMap<String, Value>,
    outputs: BTreeMap<String, String>,
    summary: Value,
    finished: bool,
}

impl Drop for RunDir {
    /// A run that fails part-way leaves no directory behind.
    fn drop(&mut self) {
        if !self.finished {
            let _ = fs::remove_dir_all(&self.path);
        }
    }
}

impl RunDir {
    /// Creates a fresh run directory under `out`.
    pub fn create(out: &Path, subcommand: &str, params: Value) -> Result<Self> {
        let hash = sha256_hex(serde_json::to_string(&params)?.as_bytes());
        let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S");
        let base = format!("{subcommand}-{stamp}-{}", &hash[..8]);
        let mut path = out.join(&base);
        let mut n = 1;
        while path.exists() {
            n += 1;
            path = out.join(format!("{base}-{n}"));
        }
        fs::create_dir_all(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(RunDir {
            path,
            subcommand: subcommand.into(),
            params,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            summary: Value::Null,
            finished: false,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Records an input file by path and content digest.
    pub fn input(&mut self, name: &str, path: &Path) -> Result<()> {
        let digest = if path.is_file() { Some(file_digest(path)?) } else { None };
        self.inputs.insert(name.into(), json!({ "path": path.display().to_string(), "sha256": digest }));
        Ok(())
    }

    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let p = self.path.join(rel);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))?;
        self.outputs.insert(rel.into(), sha256_hex(bytes));
        Ok(p)
    }

    pub fn write_text(&mut self, rel: &str, text: &str) -> Result<PathBuf> {
        self.write_bytes(rel, text.as_bytes())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, rel: &str, value: &T) -> Result<PathBuf> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write_bytes(rel, s.as_bytes())
    }

    pub fn write_jsonl<T: Serialize>(&mut self, rel: &str, records: &[T]) -> Result<PathBuf> {
        let mut s = String::new();
        for r in records {
            s.push_str(&serde_json::to_string(r)?);
            s.push('\n');
        }
        self.write_bytes(rel, s.as_bytes())
    }

    /// Registers files written by other code (such as a model checkpoint
    /// directory) so they are listed in the manifest.
    pub fn register_tree(&mut self, rel: &str) -> Result<()> {
        let root = self.path.join(rel);
        let mut stack = vec![root];
        while let Some(p) = stack.pop() {
            if p.is_dir() {
                for e in fs::read_dir(&p)? {
                    stack.push(e?.path());
                }
            } else {
                let key = p.strip_prefix(&self.path)?.to_string_lossy().replace('\\', "/");
                self.outputs.insert(key, file_digest(&p)?);
            }
        }
        Ok(())
    }

    pub fn set_summary(&mut self, summary: Value) {
        self.summary = summary;
    }

    /// Writes `manifest.json` and returns the run directory.
    pub fn finish(mut self) -> Result<PathBuf> {
        let manifest = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": self.subcommand,
            "params": self.params,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "summary": self.summary,
        });
        let mut s = serde_json::to_string_pretty(&manifest)?;
        s.push('\n');
        fs::write(self.path.join(MANIFEST), s)?;
        self.finished = true;
        Ok(self.path.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_outputs_and_omits_time() {
        let out = tempfile::tempdir().unwrap();
        let mut a = RunDir::create(out.path(), "x", json!({"k": 1})).unwrap();
        a.write_text("f.txt", "hello").unwrap();
        let pa = a.finish().unwrap();
        let mut b = RunDir::create(out.path(), "x", json!({"k": 1})).unwrap();
        b.write_text("f.txt", "hello").unwrap();
        let pb = b.finish().unwrap();
        assert_ne!(pa, pb);
        let ma = fs::read(pa.join(MANIFEST)).unwrap();
        assert_eq!(ma, fs::read(pb.join(MANIFEST)).unwrap());
        let v: Value = serde_json::from_slice(&ma).unwrap();
        assert_eq!(v["outputs"]["f.txt"], sha256_hex(b"hello"));
    }

    #[test]
    fn unfinished_run_is_removed() {
        let out = tempfile::tempdir().unwrap();
        let p = {
            let mut r = RunDir::create(out.path(), "x", json!({})).unwrap();
            r.write_text("partial", "x").unwrap();
            r.path().to_path_buf()
        };
        assert!(!p.exists());
    }
}
