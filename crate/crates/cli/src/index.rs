//! `index.json`: what a subcommand wrote and with which settings.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use urbanfno::{Error, Result};

#[derive(Debug, Serialize)]
pub struct Artifact {
    /// Relative to the output directory.
    pub path: String,
    pub kind: String,
    pub sha256: String,
    /// False for files that embed wall-clock measurements.
    pub reproducible: bool,
}

#[derive(Debug, Serialize)]
pub struct Index {
    pub command: String,
    pub version: &'static str,
    pub threads: usize,
    pub config: serde_json::Value,
    pub artifacts: Vec<Artifact>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub summary: serde_json::Value,
}

pub struct IndexBuilder {
    dir: PathBuf,
    index: Index,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

impl IndexBuilder {
    pub fn new(dir: &Path, command: &str, config: serde_json::Value) -> IndexBuilder {
        IndexBuilder {
            dir: dir.to_path_buf(),
            index: Index {
                command: command.to_string(),
                version: env!("CARGO_PKG_VERSION"),
                threads: urbanfno::par::threads(),
                config,
                artifacts: Vec::new(),
                summary: serde_json::Value::Null,
            },
        }
    }

    /// Record a file already written under the output directory.
    pub fn add(&mut self, rel: impl AsRef<Path>, kind: &str, reproducible: bool) -> Result<()> {
        let rel = rel.as_ref();
        let sha256 = sha256_file(&self.dir.join(rel))?;
        self.index.artifacts.push(Artifact {
            path: rel.to_string_lossy().replace('\\', "/"),
            kind: kind.to_string(),
            sha256,
            reproducible,
        });
        Ok(())
    }

    pub fn summary(&mut self, value: serde_json::Value) {
        self.index.summary = value;
    }

    pub fn write(self) -> Result<()> {
        let path = self.dir.join("index.json");
        let text = serde_json::to_string_pretty(&self.index)?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}
