//! Scaled dot-product attention in the row convention: queries and keys are
//! rows, attention mixes value rows.

use tensor::{Tape, Tensor};

/// Attention result plus the weights that produced it, kept for inspection.
#[derive(Debug)]
pub struct AttentionOutput {
    /// `[n, dv]` — one mixed value row per query.
    pub output: Tensor,
    /// `[n, m]` — each row is a probability vector over the keys.
    pub weights: Tensor,
}

/// softmax(Q·Kᵀ/√d)·V for `q: [n, d]`, `k: [m, d]`, `v: [m, dv]`.
pub fn scaled_dot_attention(tape: &Tape, q: &Tensor, k: &Tensor, v: &Tensor) -> AttentionOutput {
    assert_eq!(
        q.shape()[1],
        k.shape()[1],
        "scaled_dot_attention: query width {} != key width {}",
        q.shape()[1],
        k.shape()[1]
    );
    assert_eq!(
        k.shape()[0],
        v.shape()[0],
        "scaled_dot_attention: {} keys but {} value rows",
        k.shape()[0],
        v.shape()[0]
    );
    attention_with_scale(tape, q, k, v, (q.shape()[1] as f64).sqrt())
}

/// Core kernel with the normalizing constant made explicit; the multi-head
/// block scales by its representation width rather than the contraction width.
pub(crate) fn attention_with_scale(
    tape: &Tape,
    q: &Tensor,
    k: &Tensor,
    v: &Tensor,
    scale: f64,
) -> AttentionOutput {
    let scores = tape.affine(&tape.matmul(q, &tape.permute(k, &[1, 0])), 1.0 / scale, 0.0);
    let weights = tape.softmax(&scores, 1);
    let output = tape.matmul(&weights, v);
    AttentionOutput { output, weights }
}
