//! Property tests: broadcasting against an explicit-tiling oracle, softmax
//! normalization, and bitwise determinism.

use proptest::prelude::*;
use tensor::{Axis, Tape, Tensor};

/// Tiles `small` up to `full_shape` by explicit multi-index arithmetic — an
/// independent reference for what broadcasting must compute.
fn tile_to(small: &[f64], small_shape: &[usize], full_shape: &[usize]) -> Vec<f64> {
    let n: usize = full_shape.iter().product();
    let offset = full_shape.len() - small_shape.len();
    (0..n)
        .map(|flat| {
            // Decode the full multi-index, then project onto the small shape.
            let mut rem = flat;
            let mut idx = vec![0usize; full_shape.len()];
            for d in (0..full_shape.len()).rev() {
                idx[d] = rem % full_shape[d];
                rem /= full_shape[d];
            }
            let mut off = 0usize;
            for (d, &ext) in small_shape.iter().enumerate() {
                let i = if ext == 1 { 0 } else { idx[offset + d] };
                off = off * ext + i;
            }
            small[off]
        })
        .collect()
}

/// A full shape plus a broadcast-compatible partner (trailing suffix, some axes
/// degenerated to 1), with data for both.
fn broadcast_pair() -> impl Strategy<Value = (Vec<usize>, Vec<f64>, Vec<usize>, Vec<f64>)> {
    proptest::collection::vec(1usize..=4, 1..=4)
        .prop_flat_map(|full| {
            let nd = full.len();
            (Just(full), 1..=nd)
        })
        .prop_flat_map(|(full, keep)| {
            let suffix: Vec<usize> = full[full.len() - keep..].to_vec();
            let mask = proptest::collection::vec(proptest::bool::ANY, keep);
            (Just(full), Just(suffix), mask)
        })
        .prop_flat_map(|(full, suffix, mask)| {
            let small: Vec<usize> = suffix
                .iter()
                .zip(&mask)
                .map(|(&d, &m)| if m { 1 } else { d })
                .collect();
            let nf: usize = full.iter().product();
            let ns: usize = small.iter().product();
            (
                Just(full),
                proptest::collection::vec(-10.0f64..10.0, nf),
                Just(small),
                proptest::collection::vec(-10.0f64..10.0, ns),
            )
        })
}

proptest! {
    #[test]
    fn broadcast_add_matches_tiling_oracle((fs, fd, ss, sd) in broadcast_pair()) {
        let t = Tape::new();
        let a = Tensor::new(&fs, fd.clone());
        let b = Tensor::new(&ss, sd.clone());
        let got = t.add(&a, &b).to_vec();
        let tiled = tile_to(&sd, &ss, &fs);
        let want: Vec<f64> = fd.iter().zip(&tiled).map(|(x, y)| x + y).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn broadcast_mul_matches_tiling_oracle((fs, fd, ss, sd) in broadcast_pair()) {
        let t = Tape::new();
        let a = Tensor::new(&fs, fd.clone());
        let b = Tensor::new(&ss, sd.clone());
        let got = t.mul(&a, &b).to_vec();
        let tiled = tile_to(&sd, &ss, &fs);
        let want: Vec<f64> = fd.iter().zip(&tiled).map(|(x, y)| x * y).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn broadcast_is_symmetric((fs, fd, ss, sd) in broadcast_pair()) {
        let t = Tape::new();
        let a = Tensor::new(&fs, fd);
        let b = Tensor::new(&ss, sd);
        prop_assert_eq!(t.add(&a, &b).to_vec(), t.add(&b, &a).to_vec());
    }

    #[test]
    fn softmax_rows_are_probability_vectors(
        data in proptest::collection::vec(-300.0f64..300.0, 1..=24),
        split in 1usize..=4,
    ) {
        let rows = split.min(data.len());
        let cols = data.len() / rows;
        prop_assume!(cols > 0);
        let t = Tape::new();
        let x = Tensor::new(&[rows, cols], data[..rows * cols].to_vec());
        let y = t.softmax(&x, 1);
        let yd = y.to_vec();
        for r in 0..rows {
            let row = &yd[r * cols..(r + 1) * cols];
            let s: f64 = row.iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-9, "row sum {}", s);
            prop_assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn max_reduce_agrees_with_iterator_max(
        data in proptest::collection::vec(-100.0f64..100.0, 1..=32),
    ) {
        let t = Tape::new();
        let x = Tensor::new(&[data.len()], data.clone());
        let got = t.max(&x, Axis::All).item();
        let want = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(got, want);
    }

    #[test]
    fn sum_reduce_agrees_with_transposed_sum(
        data in proptest::collection::vec(-100.0f64..100.0, 12..=12),
    ) {
        // Summing axis 0 of [3,4] equals summing axis 1 after a transpose.
        let t = Tape::new();
        let x = Tensor::new(&[3, 4], data);
        let direct = t.sum(&x, Axis::At(0)).to_vec();
        let via_permute = t.sum(&t.permute(&x, &[1, 0]), Axis::At(1)).to_vec();
        for (a, b) in direct.iter().zip(&via_permute) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn forward_bits_are_reproducible(
        data in proptest::collection::vec(-5.0f64..5.0, 16..=16),
    ) {
        let run = |d: &[f64]| {
            let t = Tape::new();
            let x = Tensor::new(&[4, 4], d.to_vec());
            let y = t.softmax(&t.matmul(&x, &x), 1);
            t.sum(&y, Axis::All).item()
        };
        prop_assert_eq!(run(&data).to_bits(), run(&data).to_bits());
    }
}
