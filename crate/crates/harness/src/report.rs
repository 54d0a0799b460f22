//! Run reports: JSON for machines, CSV rows for plotting.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
}

/// Content hash of one split file, proving which bytes a number came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitHash {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub variant: String,
    pub task: String,
    pub seed: u64,
    pub train_samples: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: Vec<EpochMetrics>,
    pub stopped_early: bool,
    pub best_epoch: usize,
    pub best_val_acc: f64,
    /// Computed exactly once, after the best-validation weights are restored.
    pub test_accuracy: f64,
    pub wall_secs: f64,
    pub config_hash: String,
    pub data_hashes: Vec<SplitHash>,
}

impl Report {
    pub fn epochs_run(&self) -> usize {
        self.epochs.len()
    }

    pub fn write_json(&self, path: &Path) -> Result<(), HarnessError> {
        serde_json::to_writer_pretty(std::fs::File::create(path)?, self)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Report, HarnessError> {
        Ok(serde_json::from_reader(std::fs::File::open(path)?)?)
    }
}

/// One summary row per report; appends to `path`, writing the header only
/// when the file starts empty.
pub fn append_csv(path: &Path, reports: &[Report]) -> Result<(), HarnessError> {
    let new_file = !path.exists() || std::fs::metadata(path)?.len() == 0;
    let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    if new_file {
        w.write_record([
            "variant",
            "task",
            "seed",
            "train_samples",
            "lr",
            "weight_decay",
            "epochs_run",
            "stopped_early",
            "best_val_acc",
            "test_accuracy",
            "wall_secs",
            "config_hash",
        ])?;
    }
    for r in reports {
        w.write_record([
            r.variant.clone(),
            r.task.clone(),
            r.seed.to_string(),
            r.train_samples.to_string(),
            r.lr.to_string(),
            r.weight_decay.to_string(),
            r.epochs_run().to_string(),
            r.stopped_early.to_string(),
            r.best_val_acc.to_string(),
            r.test_accuracy.to_string(),
            r.wall_secs.to_string(),
            r.config_hash.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
