//! Generator for four-choice abstract-reasoning episodes (same/different,
//! match-to-sample, set completion, identity rules) over a procedural glyph
//! vocabulary, with controllable glyph holdout between train and test.

pub mod dataset;
pub mod episode;
pub mod glyph;

pub use dataset::{
    full_counts, gen_art_dataset, ArtManifest, ArtSplitFiles, DESK_COUNTS, GENERATOR_VERSION,
};
pub use episode::{
    compose_stimulus, gen_art_episode, split_vocab, ArtTask, Episode, HoldoutRegime, Placement,
    HOLDOUTS, JITTER, MIN_STIMULUS_SIZE,
};
pub use glyph::{Glyph, GlyphVocab, GLYPH_SIDE, MIN_HAMMING, VOCAB_SIZE};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArtError {
    #[error("holdout size {0} is not one of 0, 50, 85, 95")]
    InvalidHoldout(usize),
    #[error("unknown task name {0:?} (expected sd, rmts, dist3, or id)")]
    UnknownTask(String),
    #[error("{task} episodes need {need} distinct glyphs, pool has {have}")]
    VocabTooSmall { task: ArtTask, need: usize, have: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Container(#[from] svrt_gen::SvrtError),
}
