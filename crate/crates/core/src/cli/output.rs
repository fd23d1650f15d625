//! Output directory of one run: CSV tables, the configuration echo and a
//! manifest with the column schema and SHA-256 of every file.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dynamics::record::write_rows;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    /// Table kind and format version, e.g. `path.v1` for `path_r0003.csv`.
    pub schema: String,
    /// CSV header columns; empty for non-tabular files.
    pub columns: Vec<String>,
    pub sha256: String,
}

/// Version of every table layout; bumped when a column changes.
pub const SCHEMA_VERSION: u32 = 1;

/// `path_r0003.csv` -> `path.v1`, `config.toml` -> `config.v1`.
pub fn schema_id(file: &str) -> String {
    let stem = file.rsplit_once('.').map_or(file, |(s, _)| s);
    let kind = match stem.rsplit_once("_r") {
        Some((head, tail)) if !tail.is_empty() && tail.bytes().all(|b| b.is_ascii_digit()) => head,
        _ => stem,
    };
    format!("{kind}.v{SCHEMA_VERSION}")
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub seed: u64,
    pub git_hash: String,
    pub files: Vec<ManifestEntry>,
}

pub struct RunOutput {
    dir: PathBuf,
    entries: Vec<ManifestEntry>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Commit of the working directory, or `unknown` outside a git checkout.
pub fn git_hash() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

impl RunOutput {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn register(&mut self, name: &str, tabular: bool) -> Result<()> {
        let bytes = std::fs::read(self.path(name))?;
        let columns = if tabular {
            let text = String::from_utf8_lossy(&bytes);
            text.lines()
                .find(|l| !l.starts_with('#'))
                .map(|l| l.split(',').map(str::to_string).collect())
                .unwrap_or_default()
        } else {
            Vec::new()
        };
        self.entries.retain(|e| e.file != name);
        self.entries.push(ManifestEntry {
            file: name.to_string(),
            schema: schema_id(name),
            columns,
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    /// Writes serializable rows with a header. An empty table is an error,
    /// since its schema would be lost.
    pub fn table<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        if rows.is_empty() {
            return Err(Error::InvalidParameter(format!("table {name} has no rows")));
        }
        write_rows(&self.path(name), rows)?;
        self.register(name, true)
    }

    /// Registers a CSV written by other code, e.g. a profile cache.
    pub fn external_table(&mut self, name: &str) -> Result<()> {
        self.register(name, true)
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        std::fs::write(self.path(name), body)?;
        self.register(name, false)
    }

    /// Writes `manifest.json` listing every file written so far.
    pub fn finish(self, experiment: &str, seed: u64) -> Result<Manifest> {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            experiment: experiment.into(),
            seed,
            git_hash: git_hash(),
            files: self.entries,
        };
        let body = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.into()))?;
        std::fs::write(self.dir.join("manifest.json"), body + "\n")?;
        Ok(manifest)
    }
}

#[derive(Serialize)]
struct FailureDump<'a> {
    experiment: &'a str,
    seed: u64,
    exit_code: i32,
    error: String,
}

/// Records a failed run in `failure.json` so that partial output is not
/// mistaken for a finished one.
pub fn write_failure(dir: &Path, experiment: &str, seed: u64, err: &Error) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let dump = FailureDump {
        experiment,
        seed,
        exit_code: err.exit_code(),
        error: err.to_string(),
    };
    let body = serde_json::to_string_pretty(&dump).map_err(|e| Error::Io(e.into()))?;
    std::fs::write(dir.join("failure.json"), body + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a: f64,
        b: u32,
    }

    #[test]
    fn manifest_lists_schema_and_hash() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = RunOutput::create(dir.path()).unwrap();
        out.table("t.csv", &[Row { a: 0.5, b: 1 }]).unwrap();
        out.text("c.toml", "x = 1\n").unwrap();
        assert!(out.table::<Row>("e.csv", &[]).is_err());
        let m = out.finish("test", 3).unwrap();
        assert_eq!(m.files.len(), 2);
        assert_eq!(m.files[0].columns, vec!["a", "b"]);
        assert_eq!(m.files[0].schema, "t.v1");
        assert!(m.files[1].columns.is_empty());
        assert_eq!(m.files[1].sha256, sha256_hex(b"x = 1\n"));
        // independent value: sha256("abc")
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(schema_id("path_r0012.csv"), "path.v1");
        assert_eq!(schema_id("ou_summary.csv"), "ou_summary.v1");
        assert_eq!(schema_id("config.toml"), "config.v1");
        let text = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["seed"], 3);
    }
}
