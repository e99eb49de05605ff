//! Per-invocation bookkeeping: atomic output writes and the run manifest.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use normfuse::rng::derive_seed;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Everything needed to repeat a run: the effective arguments (config file
/// already merged), the seeds actually used, and digests of every input and
/// output file. No timestamps or absolute paths, so identical runs produce
/// identical manifests.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub args: Vec<String>,
    pub config_hash: String,
    pub root_seed: u64,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

pub struct Run {
    out: PathBuf,
    manifest: Manifest,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Run {
    pub fn new(command: &str, args: Vec<String>, out: &Path, root_seed: u64) -> Result<Self> {
        std::fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))?;
        let config_hash = sha256_hex(args.join("\n").as_bytes());
        Ok(Self {
            out: out.to_path_buf(),
            manifest: Manifest {
                tool: "normfuse",
                version: env!("CARGO_PKG_VERSION"),
                command: command.to_string(),
                args,
                config_hash,
                root_seed,
                seeds: BTreeMap::new(),
                inputs: BTreeMap::new(),
                outputs: BTreeMap::new(),
            },
        })
    }

    /// Records the digest of an input file and hands the path back.
    pub fn input<'p>(&mut self, path: &'p Path) -> Result<&'p Path> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.manifest
            .inputs
            .insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(path)
    }

    /// Seed for a named component, derived from the root seed.
    pub fn seed(&mut self, label: &str) -> u64 {
        let s = derive_seed(self.manifest.root_seed, label);
        self.manifest.seeds.insert(label.to_string(), s);
        s
    }

    /// Records a seed that was given explicitly rather than derived.
    pub fn note_seed(&mut self, label: &str, seed: u64) {
        self.manifest.seeds.insert(label.to_string(), seed);
    }

    /// Writes `name` inside the output directory via a temporary file and a
    /// rename, so readers never see a partial file.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        atomic_write(&self.out, name, bytes)?;
        self.manifest.outputs.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_str(&mut self, name: &str, text: &str) -> Result<()> {
        self.write(name, text.as_bytes())
    }

    /// Writes `<command>.manifest.json`.
    pub fn finish(self) -> Result<()> {
        let name = format!("{}.manifest.json", self.manifest.command);
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        atomic_write(&self.out, &name, text.as_bytes())
    }
}

fn atomic_write(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let dest = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(&dest)
        .with_context(|| format!("writing {}", dest.display()))?;
    log::info!("wrote {}", dest.display());
    Ok(())
}
