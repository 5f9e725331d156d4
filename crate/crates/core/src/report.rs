//! Deterministic JSON and CSV emission plus the run manifest.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{KpError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Hex SHA-256 of the configuration bytes.
pub fn config_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| KpError::Format(e.to_string()))
}

/// Column table with a fixed header.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|s| s.to_string()).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(vec![]);
        let err = |e: csv::Error| KpError::Format(e.to_string());
        w.write_record(&self.columns).map_err(err)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| format!("{v:e}"))).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| KpError::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| KpError::Format(e.to_string()))
    }
}

/// Output directory that records what it wrote.
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(OutDir { root: root.to_path_buf(), written: vec![] })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let p = self.path(name);
        fs::write(&p, contents)?;
        self.written.push(name.into());
        Ok(p)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<PathBuf> {
        self.write(name, &(to_json(v)? + "\n"))
    }

    pub fn table(&mut self, stem: &str, t: &Table, fmt: Format) -> Result<PathBuf> {
        match fmt {
            Format::Csv => self.write(&format!("{stem}.csv"), &t.to_csv()?),
            Format::Json => self.json(&format!("{stem}.json"), t),
        }
    }

    pub fn mark(&mut self, name: &str) {
        self.written.push(name.into());
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

/// Provenance record; the only output that varies between identical reruns.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub threads: usize,
    pub version: String,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<String>,
    pub status: String,
}

impl Manifest {
    pub fn new(command: &str, config: &[u8], seed: u64, threads: usize) -> Self {
        Manifest {
            command: command.into(),
            config_hash: config_hash(config),
            seed,
            threads,
            version: env!("CARGO_PKG_VERSION").into(),
            wall_clock_seconds: 0.0,
            outputs: vec![],
            status: "ok".into(),
        }
    }
}
