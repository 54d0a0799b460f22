//! Dataset loading and batch assembly.
//!
//! Containers store `u8` pixels with white = 255; batches are `[B, 1, S, S]`
//! tensors with ink near 1.0 and background 0.0, which keeps the untrained
//! encoder's activations in a sane range.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use svrt_gen::{read_container, Dataset};
use tensor::Tensor;

use crate::report::SplitHash;
use crate::HarnessError;

/// Stacks the selected images into a `[B, 1, S, S]` input tensor.
pub fn images_tensor(images: &[Vec<u8>], indices: &[usize], size: usize) -> Tensor {
    let mut data = Vec::with_capacity(indices.len() * size * size);
    for &i in indices {
        data.extend(images[i].iter().map(|&p| 1.0 - p as f64 / 255.0));
    }
    Tensor::new(&[indices.len(), 1, size, size], data)
}

pub fn sha256_file(path: &Path) -> Result<String, HarnessError> {
    let bytes = std::fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(format!("{digest:x}"))
}

fn read_split(dir: &Path, file: String) -> Result<(Dataset, SplitHash), HarnessError> {
    let path = dir.join(&file);
    if !path.exists() {
        return Err(HarnessError::MissingData(path));
    }
    let ds = read_container(&path)?;
    let hash = SplitHash { file, sha256: sha256_file(&path)? };
    Ok((ds, hash))
}

/// The three splits of one binary classification task, with content hashes
/// so reports can prove which bytes they were computed from.
#[derive(Debug)]
pub struct SvrtData {
    pub task: u32,
    /// Report label, e.g. `svrt-01` or `svrt-15+01` for merged sets.
    pub label: String,
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
    pub hashes: Vec<SplitHash>,
}

impl SvrtData {
    pub fn size(&self) -> usize {
        self.train.width as usize
    }
}

pub fn load_svrt(dir: &Path, task: u32) -> Result<SvrtData, HarnessError> {
    let mut splits = Vec::new();
    let mut hashes = Vec::new();
    for name in ["train", "val", "test"] {
        let (ds, hash) = read_split(dir, format!("task{task:02}_{name}.vrds"))?;
        splits.push(ds);
        hashes.push(hash);
    }
    let mut it = splits.into_iter();
    Ok(SvrtData {
        task,
        label: format!("svrt-{task:02}"),
        train: it.next().expect("train"),
        val: it.next().expect("val"),
        test: it.next().expect("test"),
        hashes,
    })
}

/// Episodes regrouped from the flattened container layout.
#[derive(Debug)]
pub struct EpisodeSet {
    pub images: Vec<Vec<u8>>,
    /// Answer index per episode.
    pub answers: Vec<u8>,
    pub stimuli_per_episode: usize,
    pub size: usize,
}

impl EpisodeSet {
    pub fn from_dataset(ds: Dataset, stimuli_per_episode: usize) -> Self {
        assert_eq!(ds.len() % stimuli_per_episode, 0, "container is not whole episodes");
        let answers = ds
            .labels
            .chunks(stimuli_per_episode)
            .map(|chunk| chunk[0])
            .collect();
        EpisodeSet {
            images: ds.images,
            answers,
            stimuli_per_episode,
            size: ds.width as usize,
        }
    }

    pub fn episode_count(&self) -> usize {
        self.answers.len()
    }

    /// One `[B, 1, S, S]` tensor per stimulus slot for the chosen episodes.
    pub fn stimuli_tensors(&self, episodes: &[usize]) -> Vec<Tensor> {
        (0..self.stimuli_per_episode)
            .map(|k| {
                let flat: Vec<usize> =
                    episodes.iter().map(|&e| e * self.stimuli_per_episode + k).collect();
                images_tensor(&self.images, &flat, self.size)
            })
            .collect()
    }
}

#[derive(Debug)]
pub struct ArtData {
    pub task: art_gen::ArtTask,
    pub m: usize,
    pub train: EpisodeSet,
    pub test: EpisodeSet,
    pub hashes: Vec<SplitHash>,
}

pub fn load_art(dir: &Path, task: art_gen::ArtTask, m: usize) -> Result<ArtData, HarnessError> {
    let mut sets = Vec::new();
    let mut hashes = Vec::new();
    for name in ["train", "test"] {
        let file = format!("art_{task}_m{m:02}_{name}.vrds");
        let manifest_path: PathBuf = dir.join(format!("art_{task}_m{m:02}_{name}.json"));
        let (ds, hash) = read_split(dir, file)?;
        let manifest: art_gen::ArtManifest =
            serde_json::from_reader(std::fs::File::open(manifest_path)?)?;
        sets.push(EpisodeSet::from_dataset(ds, manifest.stimuli_per_episode as usize));
        hashes.push(hash);
    }
    let mut it = sets.into_iter();
    Ok(ArtData {
        task,
        m,
        train: it.next().expect("train"),
        test: it.next().expect("test"),
        hashes,
    })
}
