use attention::{
    fbam_forward, guided_attention_step, mha_block, mha_block_detailed, scaled_dot_attention,
    MhaParams,
};
use layers::NormLayer;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use tensor::{gradcheck, Axis, Tape, Tensor};

fn permute_columns(x: &Tensor, perm: &[usize]) -> Tensor {
    let (rows, cols) = (x.shape()[0], x.shape()[1]);
    assert_eq!(perm.len(), cols);
    let d = x.to_vec();
    let mut out = vec![0.0; d.len()];
    for r in 0..rows {
        for (new_c, &old_c) in perm.iter().enumerate() {
            out[r * cols + new_c] = d[r * cols + old_c];
        }
    }
    Tensor::new(&[rows, cols], out)
}

fn permute_rows(x: &Tensor, perm: &[usize]) -> Tensor {
    let (rows, cols) = (x.shape()[0], x.shape()[1]);
    assert_eq!(perm.len(), rows);
    let d = x.to_vec();
    let mut out = vec![0.0; d.len()];
    for (new_r, &old_r) in perm.iter().enumerate() {
        out[new_r * cols..(new_r + 1) * cols].copy_from_slice(&d[old_r * cols..(old_r + 1) * cols]);
    }
    Tensor::new(&[rows, cols], out)
}

#[test]
fn mha_is_equivariant_to_position_permutation() {
    let p = MhaParams::new(&mut ChaCha12Rng::seed_from_u64(10), 2, 6, 5);
    let tape = Tape::new();
    let x = Tensor::new(&[5, 7], (0..35).map(|v| (v as f64 * 0.61).sin() * 1.5).collect());
    let perm = [3, 0, 6, 1, 5, 2, 4];

    let direct = mha_block(&tape, &p, &permute_columns(&x, &perm));
    let after = permute_columns(&mha_block(&tape, &p, &x), &perm);
    for (a, b) in direct.to_vec().iter().zip(&after.to_vec()) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn fbam_is_equivariant_to_channel_permutation() {
    let p = MhaParams::new(&mut ChaCha12Rng::seed_from_u64(11), 1, 9, 6);
    let tape = Tape::new();
    let x = Tensor::new(&[4, 2, 3], (0..24).map(|v| (v as f64 * 0.83).cos()).collect());
    let perm = [2, 0, 3, 1];

    let permuted_map = {
        let flat = permute_rows(
            &Tensor::new(&[4, 6], x.to_vec()),
            &perm,
        );
        Tensor::new(&[4, 2, 3], flat.to_vec())
    };
    let direct = fbam_forward(&tape, &p, &permuted_map);
    let after = {
        let y = fbam_forward(&tape, &p, &x);
        let flat = permute_rows(&Tensor::new(&[4, 6], y.to_vec()), &perm);
        flat.to_vec()
    };
    for (a, b) in direct.to_vec().iter().zip(&after) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn attention_gradients_match_finite_differences() {
    let tape_inputs = [
        Tensor::param(&[3, 4], (0..12).map(|v| (v as f64 * 0.7).sin()).collect::<Vec<_>>()),
        Tensor::param(&[5, 4], (0..20).map(|v| (v as f64 * 0.3).cos()).collect::<Vec<_>>()),
        Tensor::param(&[5, 2], (0..10).map(|v| v as f64 * 0.1 - 0.4).collect::<Vec<_>>()),
    ];
    gradcheck::assert_grads(
        |tape, inp| {
            let out = scaled_dot_attention(tape, &inp[0], &inp[1], &inp[2]);
            tape.sum(&tape.mul(&out.output, &out.output), Axis::All)
        },
        &tape_inputs,
        1e-5,
        1e-4,
    );
}

#[test]
fn mha_block_gradients_match_finite_differences() {
    let p = MhaParams::new(&mut ChaCha12Rng::seed_from_u64(12), 2, 4, 3);
    let x = Tensor::new(&[3, 5], (0..15).map(|v| (v as f64 * 0.5).sin()).collect::<Vec<_>>());
    let inputs: Vec<Tensor> = p.params().into_iter().map(|(_, t)| t).collect();
    gradcheck::assert_grads(
        |tape, _| {
            let y = mha_block(tape, &p, &x);
            tape.sum(&tape.mul(&y, &y), Axis::All)
        },
        &inputs,
        1e-5,
        1e-4,
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weight_rows_are_probability_vectors(
        seed in 0u64..1000,
        n_heads in 1usize..4,
        d in 2usize..8,
        d_c in 2usize..6,
        d_n in 2usize..9,
    ) {
        let p = MhaParams::new(&mut ChaCha12Rng::seed_from_u64(seed), n_heads, d, d_c);
        let tape = Tape::new();
        let n = d_c * d_n;
        let x = Tensor::new(&[d_c, d_n], (0..n).map(|v| ((v as f64 + seed as f64) * 0.77).sin() * 3.0).collect());
        let (_, weights) = mha_block_detailed(&tape, &p, &x);
        for w in weights {
            for row in w.to_vec().chunks(d) {
                prop_assert!(row.iter().all(|v| *v >= 0.0));
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn guided_step_weight_rows_sum_to_feature_affine_total(
        seed in 0u64..1000,
        hw in 2usize..10,
    ) {
        // With a bare standardization (γ=1, β=0) every row of w_t sums to
        // zero — the learned affine is the only thing that can lift it.
        let norm = NormLayer::layer(6);
        let tape = Tape::new();
        let n = hw * 6;
        let z = Tensor::new(&[hw, 6], (0..n).map(|v| ((v as f64 + seed as f64) * 0.31).cos()).collect());
        let q = Tensor::new(&[6], (0..6).map(|v| ((v as f64 - seed as f64) * 0.17).sin()).collect());
        let (w_t, z_t) = guided_attention_step(&tape, &z, &q, &norm);
        for row in w_t.to_vec().chunks(6) {
            prop_assert!(row.iter().sum::<f64>().abs() < 1e-9);
        }
        for v in z_t.to_vec() {
            prop_assert!(v.abs() < 1e-7);
        }
    }
}
