//! 2-D convolution layer over the autodiff conv kernel.

use rand_chacha::ChaCha12Rng;
use tensor::{Tape, Tensor};

use crate::init::kaiming_uniform;

#[derive(Debug)]
pub struct Conv2d {
    /// `[C_out, C_in, kH, kW]`
    pub weight: Tensor,
    /// `[C_out]`
    pub bias: Option<Tensor>,
    pub stride: usize,
    pub padding: usize,
}

impl Conv2d {
    pub fn new(
        rng: &mut ChaCha12Rng,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    ) -> Self {
        let fan_in = in_channels * kernel * kernel;
        Conv2d {
            weight: kaiming_uniform(rng, &[out_channels, in_channels, kernel, kernel], fan_in),
            bias: Some(Tensor::param(&[out_channels], vec![0.0; out_channels])),
            stride,
            padding,
        }
    }

    /// `x` is `[B, C_in, H, W]`; returns `[B, C_out, H', W']`.
    pub fn forward(&self, tape: &Tape, x: &Tensor) -> Tensor {
        let y = tape.conv2d(x, &self.weight, self.stride, self.padding);
        match &self.bias {
            Some(b) => {
                let c_out = self.weight.shape()[0];
                let b_col = tape.reshape(b, &[c_out, 1, 1]);
                tape.add(&y, &b_col)
            }
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
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use tensor::Axis;

    #[test]
    fn identity_kernel_with_bias_shifts_input() {
        let mut conv = Conv2d::new(&mut ChaCha12Rng::seed_from_u64(0), 1, 1, 1, 1, 0);
        conv.weight = Tensor::param(&[1, 1, 1, 1], vec![1.0]);
        conv.bias = Some(Tensor::param(&[1], vec![0.5]));
        let tape = Tape::new();
        let x = Tensor::new(&[1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]);
        let y = conv.forward(&tape, &x);
        assert_eq!(y.to_vec(), vec![1.5, 2.5, 3.5, 4.5]);
    }

    #[test]
    fn stride_two_halves_spatial_extent() {
        let conv = Conv2d::new(&mut ChaCha12Rng::seed_from_u64(1), 3, 8, 3, 2, 1);
        let tape = Tape::new();
        let x = Tensor::new(&[2, 3, 16, 16], vec![0.25; 2 * 3 * 256]);
        let y = conv.forward(&tape, &x);
        assert_eq!(y.shape(), &[2, 8, 8, 8]);
    }

    #[test]
    fn bias_gradient_counts_output_positions() {
        let conv = Conv2d::new(&mut ChaCha12Rng::seed_from_u64(2), 2, 4, 3, 1, 1);
        let tape = Tape::new();
        let x = Tensor::new(&[1, 2, 5, 5], (0..50).map(|v| v as f64 * 0.1).collect());
        let y = conv.forward(&tape, &x);
        let loss = tape.sum(&y, Axis::All);
        let g = tape.backward(&loss);
        let gb = g.wrt(conv.bias.as_ref().unwrap()).unwrap();
        // d(sum)/d(bias_c) is one per output pixel of that channel: 5·5 = 25.
        assert!(gb.iter().all(|v| (*v - 25.0).abs() < 1e-12));
    }
}
