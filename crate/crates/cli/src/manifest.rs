use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

/// Record of one completed run: the resolved config plus content hashes of
/// everything read and written. `outputs` lists only byte-deterministic
/// artifacts; files carrying wall-clock timings go under `volatile` and are
/// exempt from reproduction checks.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub artifact_version: String,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    pub volatile: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: impl Serialize, seed: u64) -> RunManifest {
        RunManifest {
            subcommand: subcommand.to_string(),
            config: serde_json::to_value(config).expect("config serializes"),
            seed,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            volatile: Vec::new(),
        }
    }

    /// Records an input file under the path as given on the command line.
    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(hash_entry(path, path)?);
        Ok(())
    }

    /// Records a deterministic output, stored relative to the run directory.
    pub fn add_output(&mut self, run_dir: &Path, path: &Path) -> Result<()> {
        self.outputs.push(hash_entry(path, path.strip_prefix(run_dir).unwrap_or(path))?);
        Ok(())
    }

    pub fn add_volatile(&mut self, run_dir: &Path, path: &Path) {
        let rel = path.strip_prefix(run_dir).unwrap_or(path);
        self.volatile.push(rel.to_string_lossy().into_owned());
    }

    pub fn write(&self, run_dir: &Path) -> Result<PathBuf> {
        let path = run_dir.join(MANIFEST_FILE);
        let file = std::fs::File::create(&path)
            .with_context(|| format!("writing {}", path.display()))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<RunManifest> {
        let file = std::fs::File::open(path)
            .with_context(|| format!("opening manifest {}", path.display()))?;
        serde_json::from_reader(std::io::BufReader::new(file))
            .with_context(|| format!("parsing manifest {}", path.display()))
    }

    /// Fails if any recorded input has changed on disk since the run.
    pub fn verify_inputs(&self) -> Result<()> {
        for input in &self.inputs {
            let now = harness::sha256_file(Path::new(&input.path))
                .with_context(|| format!("re-hashing input {}", input.path))?;
            if now != input.sha256 {
                bail!("input {} changed since the recorded run", input.path);
            }
        }
        Ok(())
    }

    /// Fails unless every recorded output hash is matched in `fresh`,
    /// compared by run-relative path.
    pub fn verify_outputs_against(&self, fresh: &RunManifest) -> Result<()> {
        for want in &self.outputs {
            let got = fresh
                .outputs
                .iter()
                .find(|f| f.path == want.path)
                .with_context(|| format!("re-run produced no output named {}", want.path))?;
            if got.sha256 != want.sha256 {
                bail!(
                    "output {} differs: recorded {} got {}",
                    want.path,
                    want.sha256,
                    got.sha256
                );
            }
        }
        Ok(())
    }
}

fn hash_entry(file: &Path, record_as: &Path) -> Result<FileHash> {
    let sha256 = harness::sha256_file(file)
        .with_context(|| format!("hashing {}", file.display()))?;
    Ok(FileHash { path: record_as.to_string_lossy().into_owned(), sha256 })
}
