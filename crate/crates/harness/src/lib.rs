//! Training and evaluation loops plus the four experimental protocols:
//! per-task training sweeps, zero-shot rule transfer, few-shot compositional
//! fine-tuning, and component ablations.

pub mod ablate;
pub mod compose;
pub mod config;
pub mod data;
pub mod parallel;
pub mod report;
pub mod train;
pub mod transfer;

pub use ablate::{ablate, ablation_components, parse_component};
pub use compose::{
    compositional_finetune, merge_for_pretrain, scratch_control, validate_triplet, ComposeReport,
    FewShot, CONTROL_PAIR, TRIPLETS,
};
pub use config::{art_reference_config, config_hash, grid, SampleBudget, TrainConfig};
pub use data::{
    images_tensor, load_art, load_svrt, sha256_file, ArtData, EpisodeSet, SvrtData,
};
pub use parallel::parallel_map;
pub use report::{EpochMetrics, Report, SplitHash};
pub use train::{evaluate_art, evaluate_svrt, sweep_svrt, train_art, train_svrt};
pub use transfer::{pair_aligned, zero_shot_transfer, TRANSFER_PAIRS};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("training diverged (non-finite loss) for {variant} on {task}: {config}")]
    Divergence { variant: String, task: String, config: String },
    #[error("dataset file {0} is missing; generate the task first")]
    MissingData(std::path::PathBuf),
    #[error("tasks {train} and {test} do not share a label-aligned rule")]
    MisalignedPair { train: u32, test: u32 },
    #[error("triplet ({0}, {1}, {2}) is not supported; composition targets need generators for every member")]
    UnsupportedTriplet(u32, u32, u32),
    #[error("frozen parameter {0:?} changed during fine-tuning")]
    FrozenLeak(String),
    #[error(transparent)]
    Layers(#[from] layers::LayersError),
    #[error(transparent)]
    Svrt(#[from] svrt_gen::SvrtError),
    #[error(transparent)]
    Art(#[from] art_gen::ArtError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("report csv: {0}")]
    Csv(#[from] csv::Error),
}
