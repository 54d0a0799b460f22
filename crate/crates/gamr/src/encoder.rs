//! Convolutional encoder: a stem plus four 3×3 blocks that downsample a
//! one-channel image to a `grid × grid` map of `feature_width` channels.

use layers::{Conv2d, NormLayer};
use rand_chacha::ChaCha12Rng;
use tensor::{Tape, Tensor};

use crate::GamrConfig;

#[derive(Debug)]
pub struct Encoder {
    stem: Conv2d,
    blocks: Vec<Conv2d>,
    inorm: NormLayer,
    grid: usize,
    features: usize,
    resolution: usize,
}

impl Encoder {
    pub fn new(rng: &mut ChaCha12Rng, cfg: &GamrConfig) -> Self {
        cfg.validate();
        let stem = Conv2d::new(rng, 1, cfg.stem_channels, 3, cfg.stem_stride, 1);
        let mut blocks = Vec::with_capacity(4);
        let mut channels = cfg.stem_channels;
        for (&c_out, &stride) in cfg.block_channels.iter().zip(&cfg.block_strides) {
            blocks.push(Conv2d::new(rng, channels, c_out, 3, stride, 1));
            channels = c_out;
        }
        Encoder {
            stem,
            blocks,
            inorm: NormLayer::instance(),
            grid: cfg.grid,
            features: cfg.feature_width,
            resolution: cfg.input_resolution,
        }
    }

    /// Stem convolution + activation; the entry point of the stack.
    pub fn apply_stem(&self, tape: &Tape, images: &Tensor) -> Tensor {
        assert_eq!(
            images.shape()[2..],
            [self.resolution, self.resolution],
            "encoder built for {0}×{0} inputs, got {1:?}",
            self.resolution,
            images.shape()
        );
        tape.relu(&self.stem.forward(tape, images))
    }

    /// One convolutional block + activation.
    pub fn apply_block(&self, tape: &Tape, i: usize, x: &Tensor) -> Tensor {
        tape.relu(&self.blocks[i].forward(tape, x))
    }

    /// Encodes a batch to feature rows `[B, grid², features]`.
    pub fn forward(&self, tape: &Tape, images: &Tensor, normalize: bool) -> Tensor {
        let mut x = self.apply_stem(tape, images);
        for i in 0..self.blocks.len() {
            x = self.apply_block(tape, i, &x);
        }
        let normed = if normalize { self.inorm.forward(tape, &x) } else { x };
        let b = images.shape()[0];
        let flat = tape.reshape(&normed, &[b, self.features, self.grid * self.grid]);
        tape.permute(&flat, &[0, 2, 1])
    }

    pub fn params(&self) -> Vec<(String, Tensor)> {
        let mut out = Vec::new();
        for (i, t) in self.stem.params().into_iter().enumerate() {
            out.push((format!("encoder.stem.{}", ["w", "b"][i]), t));
        }
        for (bi, block) in self.blocks.iter().enumerate() {
            for (i, t) in block.params().into_iter().enumerate() {
                out.push((format!("encoder.block{bi}.{}", ["w", "b"][i]), t));
            }
        }
        out
    }
}
