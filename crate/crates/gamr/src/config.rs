//! Model hyperparameters and the stock configurations used throughout.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GamrConfig {
    /// Number of attention/controller steps per stimulus.
    pub time_steps: usize,
    /// Width of the encoded feature rows and of the context vectors.
    pub feature_width: usize,
    /// LSTM controller hidden size.
    pub controller_hidden: usize,
    /// Width of the controller's `out` head.
    pub out_width: usize,
    /// Side of the encoded feature grid (the grid holds `grid²` locations).
    pub grid: usize,
    /// Input images are `input_resolution × input_resolution`, one channel.
    pub input_resolution: usize,
    /// Channels after the stem convolution.
    pub stem_channels: usize,
    /// Stem stride.
    pub stem_stride: usize,
    /// Channels after each of the four convolutional blocks; the last entry
    /// must equal `feature_width`.
    pub block_channels: [usize; 4],
    /// Per-block strides; together with the stem they must land on `grid`.
    pub block_strides: [usize; 4],
    /// Hidden width of the two-layer relational MLP.
    pub relational_hidden: usize,
    /// Output width of the relational MLP (`all_obj`).
    pub relational_out: usize,
}

impl GamrConfig {
    /// Small configuration for CPU experiments: 64×64 inputs, ~2M parameters.
    pub fn desk() -> Self {
        GamrConfig {
            time_steps: 4,
            feature_width: 128,
            controller_hidden: 512,
            out_width: 512,
            grid: 8,
            input_resolution: 64,
            stem_channels: 8,
            stem_stride: 1,
            block_channels: [16, 32, 64, 128],
            block_strides: [2, 2, 2, 1],
            relational_hidden: 512,
            relational_out: 256,
        }
    }

    /// Full-size configuration: 128×128 inputs, ~6.3M parameters.
    pub fn full() -> Self {
        GamrConfig {
            input_resolution: 128,
            stem_channels: 64,
            stem_stride: 2,
            block_channels: [192, 384, 768, 128],
            ..GamrConfig::desk()
        }
    }

    /// Miniature configuration for exhaustive numeric checks.
    pub fn tiny() -> Self {
        GamrConfig {
            time_steps: 2,
            feature_width: 8,
            controller_hidden: 16,
            out_width: 16,
            grid: 4,
            input_resolution: 16,
            stem_channels: 4,
            stem_stride: 1,
            block_channels: [4, 4, 8, 8],
            block_strides: [2, 2, 1, 1],
            relational_hidden: 8,
            relational_out: 8,
        }
    }

    /// Same geometry, six reasoning steps — the setting used for the
    /// multi-stimulus episode tasks.
    pub fn with_time_steps(mut self, t: usize) -> Self {
        self.time_steps = t;
        self
    }

    pub fn locations(&self) -> usize {
        self.grid * self.grid
    }

    /// Panics unless the stride plan downsamples the input exactly to `grid`.
    pub fn validate(&self) {
        assert!(self.time_steps >= 1, "need at least one time step");
        assert_eq!(
            self.block_channels[3], self.feature_width,
            "last block must emit feature_width channels"
        );
        let total: usize = self.stem_stride * self.block_strides.iter().product::<usize>();
        assert_eq!(
            self.input_resolution / total,
            self.grid,
            "stride plan {}×{:?} maps {} to {}, expected grid {}",
            self.stem_stride,
            self.block_strides,
            self.input_resolution,
            self.input_resolution / total,
            self.grid
        );
        assert_eq!(self.input_resolution % total, 0, "strides must divide the resolution");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stock_configurations_validate() {
        GamrConfig::desk().validate();
        GamrConfig::full().validate();
        GamrConfig::tiny().validate();
        GamrConfig::desk().with_time_steps(6).validate();
    }

    #[test]
    fn desk_grid_has_64_locations() {
        assert_eq!(GamrConfig::desk().locations(), 64);
    }

    #[test]
    fn bad_stride_plan_is_rejected() {
        let mut cfg = GamrConfig::desk();
        cfg.block_strides = [2, 2, 2, 2];
        assert!(std::panic::catch_unwind(move || cfg.validate()).is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = GamrConfig::full();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: GamrConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
