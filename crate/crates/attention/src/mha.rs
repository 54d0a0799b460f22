//! Multi-head self-attention over channel-major feature maps, plus the two
//! placements used with convolutional backbones: over spatial positions (SAM)
//! and over feature channels (FBAM).
//!
//! The input convention is `X [d_C, d_N]` — one column per position. Each head
//! projects the full map to a `[d, d_N]` representation, attends with scores
//! `Q·Kᵀ/√d` over its `d` rows, and the heads' outputs are stacked and mapped
//! back to `d_C` channels. Residual + per-column layer norm close the block.

use layers::init::kaiming_uniform;
use layers::NormLayer;
use rand_chacha::ChaCha12Rng;
use tensor::{Tape, Tensor};

use crate::scaled::attention_with_scale;

#[derive(Debug)]
pub struct MhaParams {
    /// Per head: (W^Q, W^K, W^V), each `[d, d_C]`.
    pub heads: Vec<(Tensor, Tensor, Tensor)>,
    /// `[d_C, n_H·d]` — maps the stacked heads back to channel space.
    pub w_o: Tensor,
    /// Per-column normalization of the residual sum, affine over `d_C`.
    pub norm: NormLayer,
    /// Representation width `d` of every head.
    pub d: usize,
}

impl MhaParams {
    pub fn new(rng: &mut ChaCha12Rng, n_heads: usize, d: usize, d_c: usize) -> Self {
        assert!(n_heads >= 1, "attention needs at least one head");
        let heads = (0..n_heads)
            .map(|_| {
                (
                    kaiming_uniform(rng, &[d, d_c], d_c),
                    kaiming_uniform(rng, &[d, d_c], d_c),
                    kaiming_uniform(rng, &[d, d_c], d_c),
                )
            })
            .collect();
        MhaParams {
            heads,
            w_o: kaiming_uniform(rng, &[d_c, n_heads * d], n_heads * d),
            norm: NormLayer::layer(d_c),
            d,
        }
    }

    /// Spatial-module defaults over a `d_c`-channel map.
    pub fn sam(rng: &mut ChaCha12Rng, d_c: usize) -> Self {
        MhaParams::new(rng, crate::SAM_HEADS, crate::SAM_WIDTH, d_c)
    }

    /// Feature-based-module defaults over `d_n` spatial positions.
    pub fn fbam(rng: &mut ChaCha12Rng, d_n: usize) -> Self {
        MhaParams::new(rng, crate::FBAM_HEADS, crate::FBAM_WIDTH, d_n)
    }

    pub fn n_heads(&self) -> usize {
        self.heads.len()
    }

    pub fn channels(&self) -> usize {
        self.w_o.shape()[0]
    }

    pub fn params(&self) -> Vec<(String, Tensor)> {
        let mut out = Vec::new();
        for (i, (wq, wk, wv)) in self.heads.iter().enumerate() {
            out.push((format!("head{i}.wq"), wq.clone()));
            out.push((format!("head{i}.wk"), wk.clone()));
            out.push((format!("head{i}.wv"), wv.clone()));
        }
        out.push(("w_o".into(), self.w_o.clone()));
        for (name, t) in [("norm.gamma", &self.norm.gamma), ("norm.beta", &self.norm.beta)] {
            if let Some(t) = t {
                out.push((name.into(), t.clone()));
            }
        }
        out
    }
}

/// Self-attention block: heads, stack, output map, residual, per-column norm.
pub fn mha_block(tape: &Tape, p: &MhaParams, x: &Tensor) -> Tensor {
    mha_block_detailed(tape, p, x).0
}

/// As [`mha_block`], also returning each head's attention weights (`[d, d]`,
/// rows are probability vectors).
pub fn mha_block_detailed(tape: &Tape, p: &MhaParams, x: &Tensor) -> (Tensor, Vec<Tensor>) {
    assert_eq!(x.shape().len(), 2, "mha_block expects [channels, positions], got {:?}", x.shape());
    assert_eq!(
        x.shape()[0],
        p.channels(),
        "mha_block: input has {} channels, projections expect {}",
        x.shape()[0],
        p.channels()
    );
    let mut outputs = Vec::with_capacity(p.heads.len());
    let mut weights = Vec::with_capacity(p.heads.len());
    for (wq, wk, wv) in &p.heads {
        let q = tape.matmul(wq, x);
        let k = tape.matmul(wk, x);
        let v = tape.matmul(wv, x);
        let head = attention_with_scale(tape, &q, &k, &v, (p.d as f64).sqrt());
        outputs.push(head.output);
        weights.push(head.weights);
    }
    let stacked = if outputs.len() == 1 {
        outputs.pop().expect("one head")
    } else {
        let refs: Vec<&Tensor> = outputs.iter().collect();
        tape.concat(&refs, 0)
    };
    let z = tape.matmul(&p.w_o, &stacked);
    let residual = tape.add(&z, x);
    // The norm layer standardizes the last axis, so normalize each position's
    // channel vector by transposing columns into rows and back.
    let rows = tape.permute(&residual, &[1, 0]);
    let normed = p.norm.forward(tape, &rows);
    (tape.permute(&normed, &[1, 0]), weights)
}

/// Attention over spatial positions: flatten `[d_C, H, W]` to `[d_C, H·W]`,
/// run the block, unflatten.
pub fn sam_forward(tape: &Tape, p: &MhaParams, featmap: &Tensor) -> Tensor {
    let shape = featmap.shape().to_vec();
    assert_eq!(shape.len(), 3, "sam_forward expects [channels, height, width], got {shape:?}");
    let flat = tape.reshape(featmap, &[shape[0], shape[1] * shape[2]]);
    let y = mha_block(tape, p, &flat);
    tape.reshape(&y, &shape)
}

/// Attention over feature channels: transpose so channels sit on the position
/// axis, run the block, transpose back.
pub fn fbam_forward(tape: &Tape, p: &MhaParams, featmap: &Tensor) -> Tensor {
    let shape = featmap.shape().to_vec();
    assert_eq!(shape.len(), 3, "fbam_forward expects [channels, height, width], got {shape:?}");
    let flat = tape.reshape(featmap, &[shape[0], shape[1] * shape[2]]);
    let transposed = tape.permute(&flat, &[1, 0]);
    let y = mha_block(tape, p, &transposed);
    let back = tape.permute(&y, &[1, 0]);
    tape.reshape(&back, &shape)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn zeroed(p: &mut MhaParams, d_c: usize) {
        let d = p.d;
        for head in &mut p.heads {
            head.0 = Tensor::param(&[d, d_c], vec![0.0; d * d_c]);
            head.1 = Tensor::param(&[d, d_c], vec![0.0; d * d_c]);
            head.2 = Tensor::param(&[d, d_c], vec![0.0; d * d_c]);
        }
        let n = p.heads.len();
        p.w_o = Tensor::param(&[d_c, n * d], vec![0.0; d_c * n * d]);
    }

    fn column_layer_norm(x: &[f64], d_c: usize, d_n: usize) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for col in 0..d_n {
            let column: Vec<f64> = (0..d_c).map(|r| x[r * d_n + col]).collect();
            let mean = column.iter().sum::<f64>() / d_c as f64;
            let var = column.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d_c as f64;
            let denom = (var + 1e-5).sqrt();
            for r in 0..d_c {
                out[r * d_n + col] = (column[r] - mean) / denom;
            }
        }
        out
    }

    #[test]
    fn zero_projections_reduce_to_column_norm() {
        let mut p = MhaParams::new(&mut ChaCha12Rng::seed_from_u64(0), 2, 6, 4);
        zeroed(&mut p, 4);
        let tape = Tape::new();
        let x = Tensor::new(&[4, 5], (0..20).map(|v| ((v * 7) % 13) as f64 - 6.0).collect());
        let y = mha_block(&tape, &p, &x);
        let want = column_layer_norm(&x.to_vec(), 4, 5);
        for (a, b) in y.to_vec().iter().zip(&want) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn block_preserves_shape() {
        for n_heads in [1, 3] {
            let p = MhaParams::new(&mut ChaCha12Rng::seed_from_u64(1), n_heads, 8, 6);
            let tape = Tape::new();
            let x = Tensor::new(&[6, 10], (0..60).map(|v| (v as f64 * 0.37).sin()).collect());
            assert_eq!(mha_block(&tape, &p, &x).shape(), &[6, 10]);
        }
    }

    #[test]
    fn attention_rows_are_probability_vectors() {
        let p = MhaParams::new(&mut ChaCha12Rng::seed_from_u64(2), 2, 7, 5);
        let tape = Tape::new();
        let x = Tensor::new(&[5, 9], (0..45).map(|v| (v as f64 * 1.3).cos() * 2.0).collect());
        let (_, weights) = mha_block_detailed(&tape, &p, &x);
        assert_eq!(weights.len(), 2);
        for w in weights {
            assert_eq!(w.shape(), &[7, 7]);
            let d = w.to_vec();
            for row in d.chunks(7) {
                assert!(row.iter().all(|v| *v >= 0.0));
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sam_and_fbam_preserve_map_shape() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let x = Tensor::new(&[6, 3, 4], (0..72).map(|v| (v as f64 * 0.11).sin()).collect());
        let tape = Tape::new();
        let sam = MhaParams::new(&mut rng, 2, 8, 6);
        assert_eq!(sam_forward(&tape, &sam, &x).shape(), &[6, 3, 4]);
        let fbam = MhaParams::new(&mut rng, 1, 8, 12);
        assert_eq!(fbam_forward(&tape, &fbam, &x).shape(), &[6, 3, 4]);
    }

    #[test]
    fn default_configurations() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let sam = MhaParams::sam(&mut rng, 32);
        assert_eq!(sam.n_heads(), 4);
        assert_eq!(sam.d, 512);
        assert_eq!(sam.heads[0].0.shape(), &[512, 32]);
        assert_eq!(sam.w_o.shape(), &[32, 4 * 512]);
        let fbam = MhaParams::fbam(&mut rng, 64);
        assert_eq!(fbam.n_heads(), 1);
        assert_eq!(fbam.d, 196);
        assert_eq!(fbam.w_o.shape(), &[64, 196]);
    }
}
