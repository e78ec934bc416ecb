// SPDX-License-Identifier: MIT OR Apache-2.0

//! Run directories and their `manifest.json`.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Settings;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: Settings,
    /// `(seed, stream_id)` of every replication.
    pub seeds: Vec<(u64, u64)>,
    pub version: String,
    pub wall_clock_seconds: f64,
    /// File name to SHA-256 hex digest.
    pub outputs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub summary: BTreeMap<String, serde_json::Value>,
}

/// An output directory being filled by one run.
pub struct RunDir {
    root: PathBuf,
    subcommand: String,
    config: Settings,
    seeds: Vec<(u64, u64)>,
    files: Vec<String>,
    summary: BTreeMap<String, serde_json::Value>,
    started: Instant,
}

impl RunDir {
    pub fn create(root: &Path, subcommand: &str, config: &Settings) -> anyhow::Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            subcommand: subcommand.to_owned(),
            config: config.clone(),
            seeds: Vec::new(),
            files: Vec::new(),
            summary: BTreeMap::new(),
            started: Instant::now(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn record_seeds(&mut self, seeds: impl IntoIterator<Item = (u64, u64)>) {
        self.seeds.extend(seeds);
    }

    pub fn summarize(&mut self, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).expect("summary values are plain data");
        self.summary.insert(key.to_owned(), value);
    }

    /// Creates `name` inside the run directory and hands a writer to `fill`.
    pub fn write<F>(&mut self, name: &str, fill: F) -> anyhow::Result<()>
    where
        F: FnOnce(&mut dyn Write) -> io::Result<()>,
    {
        let path = self.root.join(name);
        let mut out = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        fill(&mut out).with_context(|| format!("writing {}", path.display()))?;
        out.flush()?;
        self.files.push(name.to_owned());
        Ok(())
    }

    /// Records a file written directly into the run directory.
    pub fn register(&mut self, name: String) {
        self.files.push(name);
    }

    /// Hashes every written file and writes `manifest.json`.
    pub fn finish(self) -> anyhow::Result<RunManifest> {
        let mut outputs = BTreeMap::new();
        for name in &self.files {
            outputs.insert(name.clone(), file_digest(&self.root.join(name))?);
        }
        let manifest = RunManifest {
            subcommand: self.subcommand,
            config: self.config,
            seeds: self.seeds,
            version: env!("CARGO_PKG_VERSION").to_owned(),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            outputs,
            summary: self.summary,
        };
        let path = self.root.join("manifest.json");
        let mut out = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(&mut out, &manifest)?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(manifest)
    }
}

pub fn file_digest(path: &Path) -> anyhow::Result<String> {
    let mut hasher = Sha256::new();
    let mut file = File::open(path).with_context(|| format!("hashing {}", path.display()))?;
    io::copy(&mut file, &mut hasher)?;
    Ok(hex::encode(hasher.finalize()))
}
