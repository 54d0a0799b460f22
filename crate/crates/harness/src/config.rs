//! Run configuration, the sweep grid, and published reference settings.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use art_gen::ArtTask;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Validation accuracy at which training stops at the epoch boundary.
    pub early_stop: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 100,
            early_stop: 0.99,
            lr: 1e-3,
            weight_decay: 0.0,
            batch_size: 16,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) {
        assert!(self.max_epochs >= 1, "need at least one epoch");
        assert!(
            self.early_stop > 0.0 && self.early_stop <= 1.0,
            "early-stop accuracy must lie in (0, 1]"
        );
        assert!(self.batch_size >= 1, "batch size must be positive");
    }

    pub fn with_cell(&self, lr: f64, weight_decay: f64) -> TrainConfig {
        TrainConfig { lr, weight_decay, ..self.clone() }
    }
}

pub const LR_GRID: [f64; 3] = [1e-3, 3e-4, 1e-4];
pub const WD_GRID: [f64; 2] = [0.0, 1e-4];

/// The six sweep cells, best validation accuracy wins.
pub fn grid() -> Vec<(f64, f64)> {
    LR_GRID
        .iter()
        .flat_map(|&lr| WD_GRID.iter().map(move |&wd| (lr, wd)))
        .collect()
}

/// Per-task sample counts for the three splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleBudget {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SampleBudget {
    /// Counts small enough to train every variant on a CPU.
    pub fn desk() -> Self {
        SampleBudget { train: 1000, val: 500, test: 1000 }
    }

    /// The published protocol's counts.
    pub fn paper() -> Self {
        SampleBudget { train: 10_000, val: 4_000, test: 40_000 }
    }

    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }

    pub fn ratios(&self) -> [f64; 3] {
        let n = self.total() as f64;
        [self.train as f64 / n, self.val as f64 / n, self.test as f64 / n]
    }
}

/// Published epoch budget and learning rate for the episode tasks, by
/// holdout regime.
pub fn art_reference_config(task: ArtTask, m: usize) -> Option<(usize, f64)> {
    let slot = match m {
        0 => 0,
        50 => 1,
        85 => 2,
        95 => 3,
        _ => return None,
    };
    let row: [(usize, f64); 4] = match task {
        ArtTask::Sd => [(50, 1e-4), (50, 5e-4), (100, 5e-4), (200, 1e-3)],
        ArtTask::Rmts => [(50, 5e-5), (50, 1e-4), (50, 5e-4), (300, 5e-4)],
        ArtTask::Dist3 => [(50, 5e-5), (50, 1e-4), (50, 5e-5), (300, 5e-4)],
        ArtTask::Id => [(50, 5e-5), (50, 5e-5), (50, 5e-4), (100, 5e-4)],
    };
    Some(row[slot])
}

/// Stable content hash of a configuration, for report provenance.
pub fn config_hash<T: Serialize>(cfg: &T) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    format!("{digest:x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_covers_six_cells() {
        let g = grid();
        assert_eq!(g.len(), 6);
        assert!(g.contains(&(1e-3, 0.0)) && g.contains(&(1e-4, 1e-4)));
    }

    #[test]
    fn hardest_holdout_uses_the_long_schedule() {
        assert_eq!(art_reference_config(ArtTask::Sd, 95), Some((200, 1e-3)));
        assert_eq!(art_reference_config(ArtTask::Rmts, 95), Some((300, 5e-4)));
        assert_eq!(art_reference_config(ArtTask::Sd, 7), None);
    }

    #[test]
    fn config_hash_tracks_content() {
        let a = TrainConfig::default();
        let mut b = TrainConfig::default();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.lr = 3e-4;
        assert_ne!(config_hash(&a), config_hash(&b));
    }

    #[test]
    #[should_panic(expected = "early-stop")]
    fn zero_early_stop_is_rejected() {
        TrainConfig { early_stop: 0.0, ..TrainConfig::default() }.validate();
    }
}
