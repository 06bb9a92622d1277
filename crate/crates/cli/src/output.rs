//! Artifact writing: JSON envelopes, CSV tables and the run manifest.
//!
//! JSON artifacts carry `{config, config_sha256, payload, payload_sha256}`.
//! CSV files have a header row and floats at 17 significant digits; their
//! hashes and the resolved config live in `manifest.json`. Wall-clock data
//! goes only to `metadata.json`, so every other file is reproducible.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";
pub const METADATA: &str = "metadata.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// 17 significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Serialize)]
struct Envelope<'a, P: Serialize> {
    config: &'a serde_json::Value,
    config_sha256: &'a str,
    payload: &'a P,
    payload_sha256: String,
}

pub struct ArtifactWriter {
    dir: PathBuf,
    config: serde_json::Value,
    config_sha256: String,
    files: Vec<FileRecord>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path, config: &impl Serialize) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let config = serde_json::to_value(config)?;
        let config_sha256 = sha256_hex(serde_json::to_string(&config)?.as_bytes());
        Ok(Self { dir: dir.to_path_buf(), config, config_sha256, files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn config_sha256(&self) -> &str {
        &self.config_sha256
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.retain(|f| f.name != name);
        self.files.push(FileRecord { name: name.into(), bytes: bytes.len(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn write_json<P: Serialize>(&mut self, name: &str, payload: &P) -> Result<()> {
        let payload_sha256 = sha256_hex(serde_json::to_string(payload)?.as_bytes());
        let env = Envelope { config: &self.config, config_sha256: &self.config_sha256, payload, payload_sha256 };
        let mut text = serde_json::to_string_pretty(&env)?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().context("flushing csv")?;
        self.write_bytes(name, &bytes)
    }

    pub fn files(&self) -> &[FileRecord] {
        &self.files
    }

    /// Writes `manifest.json` (config plus file hashes) and `metadata.json`.
    pub fn finish(mut self, command: &str) -> Result<Vec<FileRecord>> {
        self.files.sort_by(|a, b| a.name.cmp(&b.name));
        let manifest = serde_json::json!({
            "command": command,
            "config": self.config,
            "config_sha256": self.config_sha256,
            "files": self.files,
        });
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.dir.join(MANIFEST), text)?;

        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let meta = serde_json::json!({
            "unix_time": secs,
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
        });
        fs::write(self.dir.join(METADATA), serde_json::to_string_pretty(&meta)? + "\n")?;
        Ok(self.files)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_keeps_seventeen_digits() {
        let x = 0.1f64 + 0.2;
        let s = float(x);
        assert_eq!(s.parse::<f64>().unwrap(), x);
        assert_eq!(s, "3.0000000000000004e-1");
    }

    #[test]
    fn envelope_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = ArtifactWriter::new(dir.path(), &serde_json::json!({"a": 1})).unwrap();
        w.write_json("x.json", &vec![1, 2, 3]).unwrap();
        w.write_csv("x.csv", &["n", "v"], &[vec!["1".into(), "a,b".into()]]).unwrap();
        let files = w.finish("test").unwrap();
        assert_eq!(files.len(), 2);
        let csv = fs::read_to_string(dir.path().join("x.csv")).unwrap();
        assert_eq!(csv, "n,v\n1,\"a,b\"\n");
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("x.json")).unwrap()).unwrap();
        assert_eq!(v["payload_sha256"], sha256_hex(b"[1,2,3]"));
        assert_eq!(v["config"]["a"], 1);
        assert!(dir.path().join(MANIFEST).exists() && dir.path().join(METADATA).exists());
    }
}
