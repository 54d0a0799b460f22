//! Procedural generator for binary visual-relation classification tasks:
//! random closed-contour shapes arranged to satisfy declarative geometric
//! rules (same/different, containment, contact, symmetry, …), rasterized to
//! grayscale images with pure-geometry label verification.

pub mod container;
pub mod dataset;
pub mod geometry;
pub mod scene;
pub mod shape;
pub mod tasks;

pub use container::{read_container, write_container, Dataset};
pub use dataset::{gen_dataset, sample_seed, DatasetManifest, Split, SplitFiles};
pub use scene::{render_scene, write_pgm, SceneItem, SceneSpec, NOMINAL_CANVAS};
pub use shape::{gen_shape, ShapeContour};
pub use tasks::{
    gen_task_sample, verify_category, Family, Sample, TaskParams, TaskSpec, SUPPORTED_TASKS,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SvrtError {
    #[error("rejection budget exhausted while sampling a {what}")]
    RejectionBudget { what: String },
    #[error("rejection budget exhausted for task {task} category {category} (seed {seed})")]
    SampleBudget { task: u32, category: u8, seed: u64 },
    #[error("scene geometry leaves the canvas")]
    OutOfBounds,
    #[error("task {0} is not in the supported set")]
    UnsupportedTask(u32),
    #[error("dataset sample count must be even, got {0}")]
    OddCount(usize),
    #[error("malformed dataset container: {0}")]
    BadContainer(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
