//! Atomic file output and run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Writes `contents` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// `dir/stem.p<k>.ext` for snapshot `k` of `path = dir/stem.ext`.
pub fn snapshot_path(path: &Path, k: usize) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.p{k}.{}", ext.to_string_lossy()),
        None => format!("{stem}.p{k}"),
    };
    path.with_file_name(name)
}

/// `path` with `.manifest.json` appended to its file name.
pub fn manifest_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    path.with_file_name(name)
}

pub fn unix_time() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub stable_tree: String,
    pub manifest_format: u32,
}

impl Default for Versions {
    fn default() -> Self {
        Self { stable_tree: env!("CARGO_PKG_VERSION").to_string(), manifest_format: 1 }
    }
}

/// Everything needed to rerun a command: the full argument echo plus the
/// resolved configuration. Outputs depend only on `config`, never on the
/// timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config: serde_json::Value,
    pub seed: u64,
    pub versions: Versions,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seed: u64) -> Self {
        let now = unix_time();
        Self {
            command: command.to_string(),
            args: std::env::args().collect(),
            config,
            seed,
            versions: Versions::default(),
            started_unix: now,
            finished_unix: now,
            outputs: Vec::new(),
        }
    }

    /// Stamps the finish time and writes the manifest next to `primary`.
    pub fn finish(mut self, primary: &Path) -> Result<PathBuf> {
        self.finished_unix = unix_time();
        let path = manifest_path(primary);
        write_atomic(&path, (serde_json::to_string_pretty(&self)? + "\n").as_bytes())?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_paths() {
        assert_eq!(snapshot_path(Path::new("out/tree.json"), 3), PathBuf::from("out/tree.p3.json"));
        assert_eq!(snapshot_path(Path::new("tree"), 3), PathBuf::from("tree.p3"));
        assert_eq!(manifest_path(Path::new("a/r.jsonl")), PathBuf::from("a/r.jsonl.manifest.json"));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
