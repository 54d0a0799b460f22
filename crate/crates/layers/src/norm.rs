//! Layer and instance normalization with a shared statistics kernel.

use tensor::{Axis, Tape, Tensor};

const EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    /// Normalize over the last axis; applies a learned per-feature affine.
    Layer,
    /// Normalize each `(batch, channel)` plane of a `[B, C, H, W]` input
    /// over its spatial extent; no learned parameters.
    Instance,
}

#[derive(Debug)]
pub struct NormLayer {
    pub kind: NormKind,
    /// `Layer` kind only: `[features]` scale, initialized to ones.
    pub gamma: Option<Tensor>,
    /// `Layer` kind only: `[features]` shift, initialized to zeros.
    pub beta: Option<Tensor>,
}

impl NormLayer {
    pub fn layer(features: usize) -> Self {
        NormLayer {
            kind: NormKind::Layer,
            gamma: Some(Tensor::param(&[features], vec![1.0; features])),
            beta: Some(Tensor::param(&[features], vec![0.0; features])),
        }
    }

    pub fn instance() -> Self {
        NormLayer { kind: NormKind::Instance, gamma: None, beta: None }
    }

    pub fn forward(&self, tape: &Tape, x: &Tensor) -> Tensor {
        match self.kind {
            NormKind::Layer => {
                let axis = x.shape().len() - 1;
                let normed = standardize(tape, x, axis);
                let scaled = tape.mul(&normed, self.gamma.as_ref().expect("layer norm has gamma"));
                tape.add(&scaled, self.beta.as_ref().expect("layer norm has beta"))
            }
            NormKind::Instance => {
                let shape = x.shape().to_vec();
                assert_eq!(shape.len(), 4, "instance norm expects [B, C, H, W], got {shape:?}");
                let (b, c, h, w) = (shape[0], shape[1], shape[2], shape[3]);
                let flat = tape.reshape(&x.clone(), &[b * c, h * w]);
                let normed = standardize(tape, &flat, 1);
                tape.reshape(&normed, &[b, c, h, w])
            }
        }
    }

    pub fn params(&self) -> Vec<Tensor> {
        self.gamma.iter().chain(self.beta.iter()).cloned().collect()
    }
}

/// `(x − mean) / √(var + ε)` along `axis`, with population variance.
fn standardize(tape: &Tape, x: &Tensor, axis: usize) -> Tensor {
    let mean = tape.mean(x, Axis::At(axis));
    let mean = keep_axis(tape, &mean, x.shape(), axis);
    let centered = tape.sub(x, &mean);
    let var = tape.mean(&tape.mul(&centered, &centered), Axis::At(axis));
    let var = keep_axis(tape, &var, x.shape(), axis);
    let denom = tape.sqrt(&tape.affine(&var, 1.0, EPS));
    tape.div(&centered, &denom)
}

/// Re-insert the reduced axis as length 1 so the statistic broadcasts back.
fn keep_axis(tape: &Tape, reduced: &Tensor, full: &[usize], axis: usize) -> Tensor {
    let mut shape = full.to_vec();
    shape[axis] = 1;
    tape.reshape(reduced, &shape)
}
