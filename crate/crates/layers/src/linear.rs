//! Fully connected layer with a `[out, in]` weight matrix.

use rand_chacha::ChaCha12Rng;
use tensor::{Tape, Tensor};

use crate::init::{kaiming_uniform, uniform};

#[derive(Debug)]
pub struct Linear {
    /// `[out_features, in_features]`
    pub weight: Tensor,
    /// `[out_features]`, or `None` for a bias-free map.
    pub bias: Option<Tensor>,
}

impl Linear {
    pub fn new(rng: &mut ChaCha12Rng, in_features: usize, out_features: usize) -> Self {
        Linear {
            weight: kaiming_uniform(rng, &[out_features, in_features], in_features),
            bias: Some(uniform(rng, &[out_features], 1.0 / (in_features as f64).sqrt())),
        }
    }

    pub fn new_no_bias(rng: &mut ChaCha12Rng, in_features: usize, out_features: usize) -> Self {
        Linear { weight: kaiming_uniform(rng, &[out_features, in_features], in_features), bias: None }
    }

    /// `x` is `[batch, in]`; returns `[batch, out]` = x·Wᵀ (+ b).
    pub fn forward(&self, tape: &Tape, x: &Tensor) -> Tensor {
        let wt = tape.permute(&self.weight, &[1, 0]);
        let y = tape.matmul(x, &wt);
        match &self.bias {
            Some(b) => tape.add(&y, b),
            None => y,
        }
    }

    pub fn params(&self) -> Vec<Tensor> {
        let mut p = vec![self.weight.clone()];
        if let Some(b) = &self.bias {
            p.push(b.clone());
        }
        p
    }

    pub fn in_features(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_features(&self) -> usize {
        self.weight.shape()[0]
    }
}
