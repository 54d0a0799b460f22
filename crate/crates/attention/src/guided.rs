//! Query-guided read-out over an encoded feature grid.
//!
//! Each location's feature row is shifted by an internal query, normalized,
//! and collapsed to a scalar weight; the weighted sum of the original rows is
//! the routed context vector. The weights are not squashed to a simplex — the
//! normalization alone shapes them, so they may be negative.

use layers::NormLayer;
use tensor::{Axis, Tape, Tensor};

/// One read-out step.
///
/// `z_img` is `[hw, features]` or batched `[batch, hw, features]`; `q_int` is
/// `[features]` or `[batch, features]` to match. `norm` standardizes feature
/// rows (its affine is what keeps the per-location weights from collapsing to
/// zero — a bare standardization sums to zero across features).
///
/// Returns `(w_t, z_t)`: the normalized attention map, same shape as `z_img`,
/// and the routed context `[features]` / `[batch, features]`.
pub fn guided_attention_step(
    tape: &Tape,
    z_img: &Tensor,
    q_int: &Tensor,
    norm: &NormLayer,
) -> (Tensor, Tensor) {
    let batched = match (z_img.shape().len(), q_int.shape().len()) {
        (2, 1) => false,
        (3, 2) => true,
        (zi, qi) => panic!("guided_attention_step: rank {zi} grid with rank {qi} query"),
    };
    let features = *z_img.shape().last().expect("non-empty shape");
    assert_eq!(
        features,
        *q_int.shape().last().unwrap(),
        "guided_attention_step: grid features {} != query features {}",
        features,
        q_int.shape().last().unwrap()
    );

    let query = if batched {
        let b = q_int.shape()[0];
        tape.reshape(q_int, &[b, 1, features])
    } else {
        q_int.clone()
    };
    let shifted = tape.add(z_img, &query);
    let w_t = norm.forward(tape, &shifted);

    let per_location = tape.sum(&w_t, Axis::At(z_img.shape().len() - 1));
    let weights = {
        let mut shape = z_img.shape().to_vec();
        *shape.last_mut().unwrap() = 1;
        tape.reshape(&per_location, &shape)
    };
    let weighted = tape.mul(z_img, &weights);
    let z_t = tape.sum(&weighted, Axis::At(z_img.shape().len() - 2));
    (w_t, z_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tensor::gradcheck;

    #[test]
    fn output_shapes() {
        let norm = NormLayer::layer(128);
        let tape = Tape::new();
        let z = Tensor::new(&[64, 128], (0..64 * 128).map(|v| (v as f64 * 0.01).sin()).collect());
        let q = Tensor::new(&[128], vec![0.1; 128]);
        let (w_t, z_t) = guided_attention_step(&tape, &z, &q, &norm);
        assert_eq!(w_t.shape(), &[64, 128]);
        assert_eq!(z_t.shape(), &[128]);
    }

    #[test]
    fn one_hot_row_is_routed_alone() {
        // Rows other than r are zero, so z_t can only lie along row r. A
        // non-uniform norm scale keeps row r's weight away from zero.
        let mut norm = NormLayer::layer(8);
        norm.gamma =
            Some(Tensor::param(&[8], (0..8).map(|i| 1.0 + 0.25 * i as f64).collect()));
        let tape = Tape::new();
        let mut grid = vec![0.0; 5 * 8];
        grid[3 * 8 + 6] = 2.0;
        let z = Tensor::new(&[5, 8], grid);
        let q = Tensor::new(&[8], vec![0.0; 8]);
        let (w_t, z_t) = guided_attention_step(&tape, &z, &q, &norm);

        let a3: f64 = w_t.to_vec()[3 * 8..4 * 8].iter().sum();
        assert!(a3.abs() > 1e-3, "routing weight unexpectedly degenerate: {a3}");
        let got = z_t.to_vec();
        for (j, v) in got.iter().enumerate() {
            let want = if j == 6 { a3 * 2.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-9, "feature {j}: {v} vs {want}");
        }
    }

    #[test]
    fn query_shift_by_constant_changes_nothing() {
        let norm = NormLayer::layer(6);
        let tape = Tape::new();
        let z = Tensor::new(&[4, 6], (0..24).map(|v| ((v * 5) % 7) as f64 - 3.0).collect());
        let q = Tensor::new(&[6], (0..6).map(|v| v as f64 * 0.3).collect());
        let q_shifted = Tensor::new(&[6], q.to_vec().iter().map(|v| v + 11.5).collect());
        let (w1, _) = guided_attention_step(&tape, &z, &q, &norm);
        let (w2, _) = guided_attention_step(&tape, &z, &q_shifted, &norm);
        for (a, b) in w1.to_vec().iter().zip(&w2.to_vec()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn batched_pass_matches_per_sample_loop() {
        let norm = NormLayer::layer(5);
        let tape = Tape::new();
        let grid: Vec<f64> = (0..2 * 3 * 5).map(|v| (v as f64 * 0.7).cos()).collect();
        let queries: Vec<f64> = (0..10).map(|v| (v as f64 * 1.1).sin()).collect();
        let z = Tensor::new(&[2, 3, 5], grid.clone());
        let q = Tensor::new(&[2, 5], queries.clone());
        let (w_b, z_b) = guided_attention_step(&tape, &z, &q, &norm);
        assert_eq!(w_b.shape(), &[2, 3, 5]);
        assert_eq!(z_b.shape(), &[2, 5]);

        for s in 0..2 {
            let zs = Tensor::new(&[3, 5], grid[s * 15..(s + 1) * 15].to_vec());
            let qs = Tensor::new(&[5], queries[s * 5..(s + 1) * 5].to_vec());
            let (w_s, z_s) = guided_attention_step(&tape, &zs, &qs, &norm);
            for (a, b) in w_s.to_vec().iter().zip(&w_b.to_vec()[s * 15..(s + 1) * 15]) {
                assert!((a - b).abs() < 1e-12);
            }
            for (a, b) in z_s.to_vec().iter().zip(&z_b.to_vec()[s * 5..(s + 1) * 5]) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn query_gradient_matches_finite_differences() {
        let mut norm = NormLayer::layer(6);
        norm.gamma = Some(Tensor::param(&[6], (0..6).map(|i| 0.8 + 0.1 * i as f64).collect()));
        norm.beta = Some(Tensor::param(&[6], (0..6).map(|i| 0.05 * i as f64).collect()));
        let z = Tensor::new(&[4, 6], (0..24).map(|v| (v as f64 * 0.9).sin()).collect());
        let q = Tensor::param(&[6], (0..6).map(|v| v as f64 * 0.2 - 0.5).collect());
        gradcheck::assert_grads(
            |tape, inputs| {
                let (_, z_t) = guided_attention_step(tape, &z, &inputs[0], &norm);
                tape.sum(&tape.mul(&z_t, &z_t), Axis::All)
            },
            &[q],
            1e-5,
            1e-4,
        );
    }
}
