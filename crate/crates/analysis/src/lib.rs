//! Turns grids of test accuracies into taxonomy artifacts: a Ward
//! dendrogram over tasks, principal components of the accuracy cloud,
//! per-task improvement slopes, and correlations between the two.

pub mod cluster;
pub mod matrix;
pub mod pca;
pub mod slopes;
pub mod stats;

pub use cluster::{ward_cluster, Dendrogram, Merge};
pub use matrix::AccuracyMatrix;
pub use pca::{pca, Pca};
pub use slopes::{improvement_slopes, sizes_from_labels};
pub use stats::{p_two_sided, pearson};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("matrix needs at least one row and one column")]
    EmptyMatrix,
    #[error("rows have unequal lengths")]
    RaggedMatrix,
    #[error("accuracy {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("cannot parse `{0}` as a number")]
    BadNumber(String),
    #[error("need at least two rows, got {0}")]
    TooFewRows(usize),
    #[error("asked for {k} components, shape supports {max}")]
    TooManyComponents { k: usize, max: usize },
    #[error("shape mismatch: {a:?} vs {b:?}")]
    ShapeMismatch { a: (usize, usize), b: (usize, usize) },
    #[error("length mismatch: {x} vs {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("dataset sizes must be positive, finite, and not all equal")]
    BadSize,
    #[error("base accuracy at row {row}, column {col} is not positive")]
    ZeroBase { row: usize, col: usize },
    #[error("series too short for a correlation: {0} points")]
    ShortSeries(usize),
    #[error("zero variance leaves the correlation undefined")]
    ZeroVariance,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
