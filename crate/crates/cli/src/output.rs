//! Atomic file output, CSV tables and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use echo_core::classical::ClassicalTrace;
use echo_core::echo::{EnsembleTrace, FidelityTrace};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{io_err, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputFile {
    /// Path relative to the run directory, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// A run directory. Every file lands via a temporary sibling and a rename.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Mutex<Vec<OutputFile>>,
}

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(contents).map_err(io_err(tmp.path()))?;
    tmp.as_file().sync_all().map_err(io_err(tmp.path()))?;
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(io_err(root))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Mutex::new(Vec::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes and records a checksummed output.
    pub fn write(&self, rel: &str, contents: &[u8]) -> Result<()> {
        write_atomic(&self.root.join(rel), contents)?;
        let entry = OutputFile {
            path: rel.to_string(),
            bytes: contents.len() as u64,
            sha256: sha256_hex(contents),
        };
        let mut list = self.written.lock().expect("output list poisoned");
        list.retain(|f| f.path != rel);
        list.push(entry);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&self, rel: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    /// Outputs written so far, sorted by path.
    pub fn files(&self) -> Vec<OutputFile> {
        let mut v = self.written.lock().expect("output list poisoned").clone();
        v.sort_by(|a, b| a.path.cmp(&b.path));
        v
    }
}

/// Comma-separated table. Floats use Rust's shortest round-trip formatting.
#[derive(Debug, Clone)]
pub struct Table {
    text: String,
    columns: usize,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self {
            text,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.columns);
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

pub fn num(x: f64) -> String {
    x.to_string()
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn trace_table(trace: &FidelityTrace) -> Table {
    let mut t = Table::new(&["t", "re_f", "im_f", "F"]);
    for k in 0..trace.len() {
        let f = trace.amplitude[k];
        t.row(&[trace.times[k].to_string(), num(f.re), num(f.im), num(trace.fidelity[k])]);
    }
    t
}

/// `re_f, im_f` are the ensemble-mean amplitude and `F = |<f>|^2`; `mean_F` and
/// `stderr` are the mean of `|f|^2` and its standard error.
pub fn ensemble_table(e: &EnsembleTrace) -> Table {
    let mut t = Table::new(&["t", "re_f", "im_f", "F", "mean_F", "stderr"]);
    for k in 0..e.times.len() {
        let f = e.mean_amplitude[k];
        t.row(&[
            e.times[k].to_string(),
            num(f.re),
            num(f.im),
            num(e.fidelity[k]),
            num(e.mean_fidelity[k]),
            num(e.fidelity_stderr[k]),
        ]);
    }
    t
}

pub fn classical_table(c: &ClassicalTrace) -> Table {
    let mut t = Table::new(&["t", "F", "stderr"]);
    for k in 0..c.times.len() {
        t.row(&[c.times[k].to_string(), num(c.fidelity[k]), num(c.stderr[k])]);
    }
    t
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RngStream {
    pub purpose: String,
    pub generator: String,
    pub seed: u64,
    /// Member indices drawn from the stream, as `start..end`.
    pub indices: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub mode: String,
    pub preset: Option<String>,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub derived: BTreeMap<String, serde_json::Value>,
    pub rng_streams: Vec<RngStream>,
    pub notes: Vec<String>,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputFile>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn atomic_write_replaces_and_records() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutputDir::create(dir.path()).unwrap();
        out.write("a/b.csv", b"one").unwrap();
        out.write("a/b.csv", b"two").unwrap();
        assert_eq!(std::fs::read(dir.path().join("a/b.csv")).unwrap(), b"two");
        let files = out.files();
        assert_eq!(files.len(), 1);
        assert_eq!(files[0].sha256, sha256_hex(b"two"));
        let leftovers = std::fs::read_dir(dir.path().join("a")).unwrap().count();
        assert_eq!(leftovers, 1);
    }

    #[test]
    fn floats_roundtrip_through_text() {
        for x in [0.1 + 0.2, 1e-300, -3.0, 0.8983951234567891] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}
