use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use gamr::{build_variant, ArtModel, GamrConfig, Model, VariantKind};
use layers::checkpoint::{load_checkpoint, save_checkpoint};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use tensor::Tensor;

pub const WEIGHTS_FILE: &str = "model.ckpt";
pub const SPEC_FILE: &str = "model.json";

/// Everything needed to rebuild a saved model before loading its weights:
/// the variant name, the architecture config, and the head count (output
/// logits for single-image models, stimuli per episode for episode models).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: String,
    pub config: GamrConfig,
    pub heads: usize,
    pub episode: bool,
}

pub enum LoadedModel {
    Single(Model),
    Episode(ArtModel),
}

impl LoadedModel {
    pub fn params(&self) -> Vec<(String, Tensor)> {
        match self {
            LoadedModel::Single(m) => m.params(),
            LoadedModel::Episode(m) => m.params(),
        }
    }

    pub fn single(&self) -> Result<&Model> {
        match self {
            LoadedModel::Single(m) => Ok(m),
            LoadedModel::Episode(_) => anyhow::bail!("expected a single-image model"),
        }
    }

    pub fn episode(&self) -> Result<&ArtModel> {
        match self {
            LoadedModel::Episode(m) => Ok(m),
            LoadedModel::Single(_) => anyhow::bail!("expected an episode model"),
        }
    }
}

pub fn save_model(
    dir: &Path,
    params: &[(String, Tensor)],
    spec: &ModelSpec,
    step: u64,
) -> Result<Vec<PathBuf>> {
    let ckpt = gamr::snapshot(params, step);
    let weights = dir.join(WEIGHTS_FILE);
    save_checkpoint(&weights, &ckpt)?;
    let spec_path = dir.join(SPEC_FILE);
    let file = std::fs::File::create(&spec_path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), spec)?;
    let sidecar = PathBuf::from(format!("{}.manifest.json", weights.display()));
    Ok(vec![weights, sidecar, spec_path])
}

/// Rebuilds the architecture from `model.json`, then overwrites its
/// parameters with the checkpointed values.
pub fn load_model(dir: &Path) -> Result<(LoadedModel, ModelSpec)> {
    let spec_path = dir.join(SPEC_FILE);
    let file = std::fs::File::open(&spec_path)
        .with_context(|| format!("no model spec at {}", spec_path.display()))?;
    let spec: ModelSpec = serde_json::from_reader(std::io::BufReader::new(file))?;
    let ckpt = load_checkpoint(&dir.join(WEIGHTS_FILE))?;

    let mut rng = ChaCha12Rng::seed_from_u64(0);
    let model = if spec.episode {
        let m = ArtModel::new(&mut rng, &spec.config, spec.heads);
        gamr::restore(&m.params(), &ckpt)?;
        LoadedModel::Episode(m)
    } else {
        let kind: VariantKind =
            spec.variant.parse().map_err(|e: String| anyhow::anyhow!(e))?;
        let m = build_variant(kind, &mut rng, &spec.config, spec.heads);
        gamr::restore(&m.params(), &ckpt)?;
        LoadedModel::Single(m)
    };
    Ok((model, spec))
}
