//! Output files: CSV tables with fixed column order, JSON summaries and a
//! run manifest listing the configuration, seeds, versions and the hash of
//! every file written.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{hex, ExperimentConfig};
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    /// The resolved configuration as TOML; feeding it back reproduces the run.
    pub config: String,
    pub seeds: BTreeMap<String, u64>,
    pub versions: BTreeMap<String, String>,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::Manifest(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Manifest(e.to_string()))
    }

    pub fn config(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::from_toml_str(&self.config, &[])
    }
}

/// Writes into one directory and remembers what it wrote.
pub struct Emitter {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Output { path: path.display().to_string(), source }
}

impl Emitter {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Emitter { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Write raw bytes to `name` (relative to the output directory).
    pub fn bytes(&mut self, name: &str, data: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        fs::write(&path, data).map_err(io_err(&path))?;
        self.files.push(FileEntry { file: name.to_string(), sha256: hex(&Sha256::digest(data)) });
        Ok(path)
    }

    /// CSV with the given header; an empty table gives a header-only file.
    pub fn csv<T: Serialize>(&mut self, name: &str, columns: &[&str], rows: &[T]) -> Result<PathBuf> {
        let data = csv_bytes(columns, rows)?;
        self.bytes(name, &data)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut data = serde_json::to_vec_pretty(value).map_err(|e| HarnessError::Manifest(e.to_string()))?;
        data.push(b'\n');
        self.bytes(name, &data)
    }

    /// Write `manifest_<command>.json` covering every file written so far.
    pub fn finish(mut self, command: &str, cfg: &ExperimentConfig) -> Result<PathBuf> {
        let mut seeds = BTreeMap::new();
        seeds.insert("initial".to_string(), cfg.initial.seed);
        seeds.insert("identities".to_string(), cfg.identities.seed);
        seeds.insert("divisor_aspects".to_string(), cfg.divisor.aspect_seed);
        let mut versions = BTreeMap::new();
        versions.insert("machflow-core".to_string(), machflow_core::VERSION.to_string());
        versions.insert("machflow-harness".to_string(), env!("CARGO_PKG_VERSION").to_string());
        versions.insert("config-schema".to_string(), crate::config::SCHEMA.to_string());
        let files = std::mem::take(&mut self.files);
        let m = Manifest {
            command: command.to_string(),
            config_sha256: cfg.hash(),
            config: cfg.to_toml(),
            seeds,
            versions,
            files,
        };
        self.json(&format!("manifest_{command}.json"), &m)
    }
}

pub fn csv_bytes<T: Serialize>(columns: &[&str], rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(columns)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| HarnessError::Manifest(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::converge::EpsRow;

    #[test]
    fn empty_table_is_header_only() {
        let b = csv_bytes::<EpsRow>(&EpsRow::COLUMNS, &[]).unwrap();
        let text = String::from_utf8(b).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("eps,steps,dt,w,z"));
    }

    #[test]
    fn unwritable_directory_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        fs::write(&file, b"x").unwrap();
        assert!(matches!(Emitter::new(&file.join("sub")), Err(HarnessError::Output { .. })));
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut e = Emitter::new(dir.path()).unwrap();
        e.bytes("a.txt", b"hello").unwrap();
        let cfg = ExperimentConfig::default();
        let p = e.finish("demo", &cfg).unwrap();
        let m = Manifest::load(&p).unwrap();
        assert_eq!(m.config().unwrap(), cfg);
        assert_eq!(m.config_sha256, cfg.hash());
        assert_eq!(m.files.len(), 1);
    }
}
