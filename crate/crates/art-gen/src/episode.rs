//! Episode construction for the four abstract-reasoning task types.
//!
//! An episode is a set of candidate stimuli plus the index of the correct
//! one. Every stimulus is a single grayscale image composing all
//! task-relevant glyphs, each glyph independently jittered around its
//! nominal cell center.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::glyph::{GlyphVocab, GLYPH_SIDE, VOCAB_SIZE};
use crate::ArtError;

/// Smallest stimulus edge that keeps three jittered columns from colliding.
pub const MIN_STIMULUS_SIZE: usize = 80;
/// Glyph placement jitter bound, in pixels, per axis.
pub const JITTER: i32 = 5;

pub const HOLDOUTS: [usize; 4] = [0, 50, 85, 95];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtTask {
    Sd,
    Rmts,
    Dist3,
    Id,
}

impl ArtTask {
    pub const ALL: [ArtTask; 4] = [ArtTask::Sd, ArtTask::Rmts, ArtTask::Dist3, ArtTask::Id];

    /// Number of answer options (SD is a binary judgement on one stimulus).
    pub fn choices(self) -> usize {
        match self {
            ArtTask::Sd | ArtTask::Rmts => 2,
            ArtTask::Dist3 | ArtTask::Id => 4,
        }
    }

    pub fn stimuli_per_episode(self) -> usize {
        match self {
            ArtTask::Sd => 1,
            ArtTask::Rmts => 2,
            ArtTask::Dist3 | ArtTask::Id => 4,
        }
    }

    /// Fewest distinct glyphs an episode can be built from.
    pub fn min_vocab(self) -> usize {
        match self {
            ArtTask::Sd => 2,
            ArtTask::Rmts => 5,
            ArtTask::Dist3 | ArtTask::Id => 4,
        }
    }
}

impl fmt::Display for ArtTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ArtTask::Sd => "sd",
            ArtTask::Rmts => "rmts",
            ArtTask::Dist3 => "dist3",
            ArtTask::Id => "id",
        };
        write!(f, "{name}")
    }
}

impl FromStr for ArtTask {
    type Err = ArtError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sd" => Ok(ArtTask::Sd),
            "rmts" => Ok(ArtTask::Rmts),
            "dist3" => Ok(ArtTask::Dist3),
            "id" => Ok(ArtTask::Id),
            _ => Err(ArtError::UnknownTask(s.to_string())),
        }
    }
}

/// Which glyph indices each role may draw from under an `m`-glyph holdout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HoldoutRegime {
    pub m: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl HoldoutRegime {
    pub fn pool(&self, train: bool) -> &[usize] {
        if train {
            &self.train
        } else {
            &self.test
        }
    }
}

/// Partitions the vocabulary: `m` glyphs become test-only; at `m = 0` the
/// test set reuses the training glyphs wholesale.
pub fn split_vocab(m: usize, seed: u64) -> Result<HoldoutRegime, ArtError> {
    if !HOLDOUTS.contains(&m) {
        return Err(ArtError::InvalidHoldout(m));
    }
    let mut indices: Vec<usize> = (0..VOCAB_SIZE).collect();
    if m == 0 {
        return Ok(HoldoutRegime { m, train: indices.clone(), test: indices });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let (test, train) = indices.split_at(m);
    Ok(HoldoutRegime { m, train: train.to_vec(), test: test.to_vec() })
}

/// One glyph stamped at `cell` center displaced by `offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub glyph: usize,
    pub cell: (i32, i32),
    pub offset: (i32, i32),
}

#[derive(Debug, Clone)]
pub struct Episode {
    pub task: ArtTask,
    pub answer: u8,
    /// Rendered stimuli, row-major `size`×`size`, 255 background.
    pub stimuli: Vec<Vec<u8>>,
    /// Placements behind each stimulus, in rendering order.
    pub layout: Vec<Vec<Placement>>,
    pub size: usize,
}

/// Stamps each placement's glyph onto a white canvas.
pub fn compose_stimulus(vocab: &GlyphVocab, placements: &[Placement], size: usize) -> Vec<u8> {
    assert!(size >= MIN_STIMULUS_SIZE, "stimuli need at least {MIN_STIMULUS_SIZE} px");
    let mut pixels = vec![255u8; size * size];
    let half = (GLYPH_SIDE / 2) as i32;
    for p in placements {
        let left = p.cell.0 + p.offset.0 - half;
        let top = p.cell.1 + p.offset.1 - half;
        assert!(
            left >= 0
                && top >= 0
                && left + GLYPH_SIDE as i32 <= size as i32
                && top + GLYPH_SIDE as i32 <= size as i32,
            "glyph placement leaves the canvas"
        );
        let bits = vocab.glyph(p.glyph).bits();
        for y in 0..GLYPH_SIDE {
            for x in 0..GLYPH_SIDE {
                if bits[y * GLYPH_SIDE + x] == 1 {
                    let row = (top as usize + y) * size;
                    pixels[row + left as usize + x] = 0;
                }
            }
        }
    }
    pixels
}

/// Builds one episode whose correct option sits at `answer`, deterministic
/// in `seed`. All glyph identities are drawn from `pool`.
pub fn gen_art_episode(
    task: ArtTask,
    vocab: &GlyphVocab,
    pool: &[usize],
    answer: u8,
    seed: u64,
    jitter: bool,
    size: usize,
) -> Result<Episode, ArtError> {
    assert!((answer as usize) < task.choices(), "answer slot out of range");
    if pool.len() < task.min_vocab() {
        return Err(ArtError::VocabTooSmall {
            task,
            need: task.min_vocab(),
            have: pool.len(),
        });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let layout = match task {
        ArtTask::Sd => sd_layout(pool, answer, &mut rng, size),
        ArtTask::Rmts => rmts_layout(pool, answer, &mut rng, size),
        ArtTask::Dist3 => dist3_layout(pool, answer, &mut rng, size),
        ArtTask::Id => id_layout(pool, answer, &mut rng, size),
    };
    let layout: Vec<Vec<Placement>> = layout
        .into_iter()
        .map(|stim| {
            stim.into_iter()
                .map(|(glyph, cell)| Placement { glyph, cell, offset: draw_offset(&mut rng, jitter) })
                .collect()
        })
        .collect();
    let stimuli = layout.iter().map(|p| compose_stimulus(vocab, p, size)).collect();
    Ok(Episode { task, answer, stimuli, layout, size })
}

fn draw_offset(rng: &mut ChaCha12Rng, jitter: bool) -> (i32, i32) {
    if jitter {
        (rng.random_range(-JITTER..=JITTER), rng.random_range(-JITTER..=JITTER))
    } else {
        (0, 0)
    }
}

fn draw_distinct(pool: &[usize], n: usize, rng: &mut ChaCha12Rng) -> Vec<usize> {
    let mut picks = pool.to_vec();
    picks.shuffle(rng);
    picks.truncate(n);
    picks
}

fn columns(n: usize, size: usize) -> Vec<i32> {
    let s = size as f64;
    match n {
        2 => vec![(s * 0.25) as i32, (s * 0.75) as i32],
        3 => vec![(s * 0.175) as i32, (s * 0.5) as i32, (s * 0.825) as i32],
        _ => unreachable!("layouts use two or three columns"),
    }
}

fn rows(n: usize, size: usize) -> Vec<i32> {
    let s = size as f64;
    match n {
        1 => vec![(s * 0.5) as i32],
        2 => vec![(s * 0.25) as i32, (s * 0.75) as i32],
        _ => unreachable!("layouts use one or two rows"),
    }
}

type Slot = (usize, (i32, i32));

/// Two glyphs side by side; `answer = 1` means they are the same glyph.
fn sd_layout(pool: &[usize], answer: u8, rng: &mut ChaCha12Rng, size: usize) -> Vec<Vec<Slot>> {
    let picks = draw_distinct(pool, 2, rng);
    let pair = if answer == 1 { [picks[0], picks[0]] } else { [picks[0], picks[1]] };
    let xs = columns(2, size);
    let y = rows(1, size)[0];
    vec![pair.iter().zip(&xs).map(|(&g, &x)| (g, (x, y))).collect()]
}

/// Source pair on top, one candidate pair below; the correct stimulus is the
/// one whose bottom pair repeats the top pair's same/different relation.
fn rmts_layout(pool: &[usize], answer: u8, rng: &mut ChaCha12Rng, size: usize) -> Vec<Vec<Slot>> {
    let picks = draw_distinct(pool, 5, rng);
    let source_same = rng.random_bool(0.5);
    let source = if source_same { [picks[0], picks[0]] } else { [picks[0], picks[1]] };
    let matching = if source_same { [picks[2], picks[2]] } else { [picks[2], picks[3]] };
    let other = if source_same { [picks[3], picks[4]] } else { [picks[4], picks[4]] };
    let xs = columns(2, size);
    let ys = rows(2, size);
    let stimulus = |choice: [usize; 2]| -> Vec<Slot> {
        source
            .iter()
            .zip(&xs)
            .map(|(&g, &x)| (g, (x, ys[0])))
            .chain(choice.iter().zip(&xs).map(|(&g, &x)| (g, (x, ys[1]))))
            .collect()
    };
    let mut out = vec![stimulus(other); 2];
    out[answer as usize] = stimulus(matching);
    out
}

/// A permuted triple on top, the same triple re-permuted below with its last
/// slot replaced by one of four candidates.
fn dist3_layout(pool: &[usize], answer: u8, rng: &mut ChaCha12Rng, size: usize) -> Vec<Vec<Slot>> {
    let triple = draw_distinct(pool, 3, rng);
    let mut top = triple.clone();
    top.shuffle(rng);
    let mut bottom = triple.clone();
    bottom.shuffle(rng);
    let correct = bottom[2];
    let candidates = place_candidates(pool, correct, answer, rng);
    completion_stimuli(&top, &bottom[..2], &candidates, size)
}

/// ABA on top; the bottom row starts CD and the correct completion is C.
fn id_layout(pool: &[usize], answer: u8, rng: &mut ChaCha12Rng, size: usize) -> Vec<Vec<Slot>> {
    let picks = draw_distinct(pool, 4, rng);
    let (a, b, c, d) = (picks[0], picks[1], picks[2], picks[3]);
    let candidates = place_candidates(pool, c, answer, rng);
    completion_stimuli(&[a, b, a], &[c, d], &candidates, size)
}

/// Four distinct candidates with `correct` forced into slot `answer`.
fn place_candidates(
    pool: &[usize],
    correct: usize,
    answer: u8,
    rng: &mut ChaCha12Rng,
) -> Vec<usize> {
    let mut distractors: Vec<usize> = pool.iter().copied().filter(|&g| g != correct).collect();
    distractors.shuffle(rng);
    distractors.truncate(3);
    let mut candidates = distractors;
    candidates.insert(answer as usize, correct);
    candidates
}

fn completion_stimuli(
    top: &[usize],
    bottom: &[usize],
    candidates: &[usize],
    size: usize,
) -> Vec<Vec<Slot>> {
    let xs = columns(3, size);
    let ys = rows(2, size);
    candidates
        .iter()
        .map(|&candidate| {
            top.iter()
                .zip(&xs)
                .map(|(&g, &x)| (g, (x, ys[0])))
                .chain(
                    bottom
                        .iter()
                        .chain(std::iter::once(&candidate))
                        .zip(&xs)
                        .map(|(&g, &x)| (g, (x, ys[1]))),
                )
                .collect()
        })
        .collect()
}
