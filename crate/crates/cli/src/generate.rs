use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use svrt_gen::TaskSpec;

use crate::manifest::RunManifest;
use crate::run_dir;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub task: u32,
    pub n: usize,
    pub ratios: [f64; 3],
    pub seed: u64,
    pub size: usize,
    pub out: Option<PathBuf>,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            task: 0,
            n: 2500,
            ratios: [0.4, 0.2, 0.4],
            seed: 0,
            size: 64,
            out: None,
        }
    }
}

pub fn run_gen(cfg: GenConfig) -> Result<RunManifest> {
    let spec = TaskSpec::new(cfg.task)?;
    let out = run_dir(&cfg.out, &format!("gen-task{:02}-s{}", cfg.task, cfg.seed))?;
    let files = svrt_gen::gen_dataset(&out, &spec, cfg.n, cfg.seed, cfg.ratios, cfg.size)
        .context("dataset generation failed")?;

    let mut manifest = RunManifest::new("gen", &cfg, cfg.seed);
    for f in &files {
        manifest.add_output(&out, &f.data)?;
        manifest.add_output(&out, &f.manifest)?;
        println!("{:>5} {:?} samples -> {}", f.count, f.split, f.data.display());
    }
    manifest.write(&out)?;
    Ok(manifest)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GenArtConfig {
    pub task: String,
    pub m: usize,
    pub train: usize,
    pub test: usize,
    pub vocab_seed: u64,
    pub seed: u64,
    pub jitter: bool,
    pub size: usize,
    pub out: Option<PathBuf>,
}

impl Default for GenArtConfig {
    fn default() -> Self {
        GenArtConfig {
            task: "sd".into(),
            m: 0,
            train: art_gen::DESK_COUNTS.0,
            test: art_gen::DESK_COUNTS.1,
            vocab_seed: 0,
            seed: 0,
            jitter: true,
            size: 80,
            out: None,
        }
    }
}

pub fn run_gen_art(cfg: GenArtConfig) -> Result<RunManifest> {
    let task: art_gen::ArtTask =
        cfg.task.parse().map_err(|e: art_gen::ArtError| anyhow::anyhow!(e))?;
    let out = run_dir(&cfg.out, &format!("gen-art-{}-m{:02}-s{}", task, cfg.m, cfg.seed))?;
    let files = art_gen::gen_art_dataset(
        &out,
        task,
        cfg.m,
        (cfg.train, cfg.test),
        cfg.vocab_seed,
        cfg.seed,
        cfg.jitter,
        cfg.size,
    )
    .context("episode generation failed")?;

    let mut manifest = RunManifest::new("gen-art", &cfg, cfg.seed);
    for f in &files {
        manifest.add_output(&out, &f.data)?;
        manifest.add_output(&out, &f.manifest)?;
        println!("{:>5} {:?} episodes -> {}", f.episodes, f.split, f.data.display());
    }
    manifest.write(&out)?;
    Ok(manifest)
}

/// Hashes of every split file in a dataset directory, recorded as run inputs.
pub fn record_data_inputs(manifest: &mut RunManifest, dir: &Path) -> Result<()> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading data directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("vrds") | Some("json")
            ) && p.file_name().is_some_and(|n| n != crate::manifest::MANIFEST_FILE)
        })
        .collect();
    paths.sort();
    for p in paths {
        manifest.add_input(&p)?;
    }
    Ok(())
}
