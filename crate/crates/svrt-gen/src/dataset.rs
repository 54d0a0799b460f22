//! Balanced dataset generation with per-split seed streams.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::container::write_container;
use crate::tasks::{gen_task_sample, TaskParams, TaskSpec};
use crate::SvrtError;

pub const GENERATOR_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    fn tag(self) -> u64 {
        match self {
            Split::Train => 1,
            Split::Val => 2,
            Split::Test => 3,
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Split::Train => write!(f, "train"),
            Split::Val => write!(f, "val"),
            Split::Test => write!(f, "test"),
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Per-sample seed: a deterministic function of (dataset seed, split, index)
/// whose streams never collide across splits.
pub fn sample_seed(base: u64, split: Split, index: usize) -> u64 {
    splitmix64(splitmix64(base) ^ splitmix64((split.tag() << 56) | index as u64))
}

/// Sidecar describing one written split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub task_id: u32,
    pub family: String,
    pub seed: u64,
    pub split: Split,
    pub generator_version: String,
    pub image_size: u16,
    pub count: u32,
    pub per_label: [u32; 2],
    pub params: TaskParams,
}

#[derive(Debug, Clone)]
pub struct SplitFiles {
    pub split: Split,
    pub data: PathBuf,
    pub manifest: PathBuf,
    pub count: usize,
}

/// Generates `n` oracle-checked samples for `task`, split by `ratios`
/// (train/val/test, summing to 1), each split exactly class-balanced, and
/// writes one container + manifest per split. Bit-identical for identical
/// arguments.
pub fn gen_dataset(
    dir: &Path,
    task: &TaskSpec,
    n: usize,
    seed: u64,
    ratios: [f64; 3],
    size: usize,
) -> Result<Vec<SplitFiles>, SvrtError> {
    if n % 2 != 0 {
        return Err(SvrtError::OddCount(n));
    }
    assert!(
        (ratios.iter().sum::<f64>() - 1.0).abs() < 1e-9 && ratios.iter().all(|&r| r >= 0.0),
        "split ratios must be non-negative and sum to 1"
    );
    std::fs::create_dir_all(dir)?;
    let even = |x: f64| (x as usize) / 2 * 2;
    let train = even(n as f64 * ratios[0]);
    let val = even(n as f64 * ratios[1]);
    let test = n - train - val;
    let mut out = Vec::new();
    for (split, count) in [(Split::Train, train), (Split::Val, val), (Split::Test, test)] {
        out.push(write_split(dir, task, split, count, seed, size)?);
    }
    Ok(out)
}

fn write_split(
    dir: &Path,
    task: &TaskSpec,
    split: Split,
    count: usize,
    seed: u64,
    size: usize,
) -> Result<SplitFiles, SvrtError> {
    let mut labels = Vec::with_capacity(count);
    let mut images = Vec::with_capacity(count);
    for index in 0..count {
        // Alternating labels make every prefix as balanced as possible.
        let category = (index % 2) as u8;
        let sample = gen_task_sample(task, category, sample_seed(seed, split, index), size)?;
        labels.push(sample.label);
        images.push(sample.image);
    }
    let data = dir.join(format!("task{:02}_{split}.vrds", task.id));
    let manifest_path = dir.join(format!("task{:02}_{split}.json", task.id));
    write_container(
        &data,
        size as u16,
        size as u16,
        labels.iter().zip(&images).map(|(&l, img)| (l, img.as_slice())),
    )?;
    let ones = labels.iter().filter(|&&l| l == 1).count() as u32;
    let manifest = DatasetManifest {
        task_id: task.id,
        family: task.family.to_string(),
        seed,
        split,
        generator_version: GENERATOR_VERSION.into(),
        image_size: size as u16,
        count: count as u32,
        per_label: [count as u32 - ones, ones],
        params: task.params.clone(),
    };
    std::fs::write(&manifest_path, serde_json::to_vec_pretty(&manifest)?)?;
    Ok(SplitFiles { split, data, manifest: manifest_path, count })
}
