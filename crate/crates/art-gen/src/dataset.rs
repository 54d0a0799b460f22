//! Episode-set generation and the on-disk layout.
//!
//! Episodes are flattened into the shared binary container: an episode with
//! k stimuli occupies k consecutive samples, every one labeled with the
//! episode's answer index. The sidecar manifest records how to regroup them.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use svrt_gen::{sample_seed, write_container, Split};

use crate::episode::{gen_art_episode, split_vocab, ArtTask, HoldoutRegime};
use crate::glyph::GlyphVocab;
use crate::ArtError;

pub const GENERATOR_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Train/test episode counts small enough for a laptop run.
pub const DESK_COUNTS: (usize, usize) = (2000, 1000);

/// Published full-scale episode counts, indexed by holdout regime.
pub fn full_counts(task: ArtTask, m: usize) -> Result<(usize, usize), ArtError> {
    let slot = match m {
        0 => 0,
        50 => 1,
        85 => 2,
        95 => 3,
        _ => return Err(ArtError::InvalidHoldout(m)),
    };
    let (train, test) = match task {
        ArtTask::Sd => ([18_810, 4_900, 420, 40], [990, 4_900, 10_000, 10_000]),
        ArtTask::Rmts => ([10_000, 10_000, 10_000, 480], [10_000; 4]),
        ArtTask::Dist3 => ([10_000, 10_000, 10_000, 360], [10_000; 4]),
        ArtTask::Id => ([10_000, 10_000, 10_000, 8_640], [10_000; 4]),
    };
    Ok((train[slot], test[slot]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtManifest {
    pub task: ArtTask,
    pub m: usize,
    pub vocab_seed: u64,
    pub seed: u64,
    pub split: Split,
    pub episodes: u32,
    pub stimuli_per_episode: u32,
    pub image_size: u16,
    pub jitter: bool,
    pub answer_distribution: Vec<u32>,
    pub generator_version: String,
}

#[derive(Debug, Clone)]
pub struct ArtSplitFiles {
    pub split: Split,
    pub data: PathBuf,
    pub manifest: PathBuf,
    pub episodes: usize,
}

/// Writes one container + manifest per split. Training episodes draw only
/// from the regime's training glyphs, test episodes from its test glyphs.
#[allow(clippy::too_many_arguments)]
pub fn gen_art_dataset(
    dir: &Path,
    task: ArtTask,
    m: usize,
    counts: (usize, usize),
    vocab_seed: u64,
    seed: u64,
    jitter: bool,
    size: usize,
) -> Result<Vec<ArtSplitFiles>, ArtError> {
    let vocab = GlyphVocab::generate(vocab_seed);
    let regime = split_vocab(m, vocab_seed)?;
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for (split, count) in [(Split::Train, counts.0), (Split::Test, counts.1)] {
        out.push(write_split(dir, task, &vocab, &regime, split, count, seed, jitter, size)?);
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn write_split(
    dir: &Path,
    task: ArtTask,
    vocab: &GlyphVocab,
    regime: &HoldoutRegime,
    split: Split,
    count: usize,
    seed: u64,
    jitter: bool,
    size: usize,
) -> Result<ArtSplitFiles, ArtError> {
    let pool = regime.pool(split == Split::Train);
    let choices = task.choices();
    let mut labels = Vec::with_capacity(count * task.stimuli_per_episode());
    let mut images = Vec::with_capacity(count * task.stimuli_per_episode());
    let mut answer_distribution = vec![0u32; choices];
    for index in 0..count {
        // Cycling the answer slot keeps every prefix as balanced as possible.
        let answer = (index % choices) as u8;
        let episode = gen_art_episode(
            task,
            vocab,
            pool,
            answer,
            sample_seed(seed, split, index),
            jitter,
            size,
        )?;
        answer_distribution[answer as usize] += 1;
        for stimulus in episode.stimuli {
            labels.push(answer);
            images.push(stimulus);
        }
    }
    let data = dir.join(format!("art_{task}_m{m:02}_{split}.vrds", m = regime.m));
    let manifest_path = dir.join(format!("art_{task}_m{m:02}_{split}.json", m = regime.m));
    write_container(
        &data,
        size as u16,
        size as u16,
        labels.iter().copied().zip(images.iter().map(Vec::as_slice)),
    )?;
    let manifest = ArtManifest {
        task,
        m: regime.m,
        vocab_seed: vocab.seed(),
        seed,
        split,
        episodes: count as u32,
        stimuli_per_episode: task.stimuli_per_episode() as u32,
        image_size: size as u16,
        jitter,
        answer_distribution,
        generator_version: GENERATOR_VERSION.to_string(),
    };
    serde_json::to_writer_pretty(std::fs::File::create(&manifest_path)?, &manifest)?;
    Ok(ArtSplitFiles { split, data, manifest: manifest_path, episodes: count })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_counts_match_the_reference_table() {
        assert_eq!(full_counts(ArtTask::Sd, 0).unwrap(), (18_810, 990));
        assert_eq!(full_counts(ArtTask::Sd, 95).unwrap(), (40, 10_000));
        assert_eq!(full_counts(ArtTask::Rmts, 95).unwrap(), (480, 10_000));
        assert_eq!(full_counts(ArtTask::Dist3, 95).unwrap(), (360, 10_000));
        assert_eq!(full_counts(ArtTask::Id, 95).unwrap(), (8_640, 10_000));
        assert!(full_counts(ArtTask::Sd, 40).is_err());
    }
}
