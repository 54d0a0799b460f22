//! Finite-difference verification of every differentiable operation, each on
//! at least 20 random small inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use tensor::gradcheck::{assert_grads, max_rel_err};
use tensor::{Axis, Tape, Tensor};

const H: f64 = 1e-5;
const INSTANCES: usize = 20;

fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

fn rand_tensor(r: &mut ChaCha12Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::param(shape, (0..n).map(|_| r.random_range(lo..hi)).collect())
}

/// Random small shape, rank 1–3.
fn rand_shape(r: &mut ChaCha12Rng) -> Vec<usize> {
    let rank = r.random_range(1..=3);
    (0..rank).map(|_| r.random_range(1..=4)).collect()
}

/// Scalarizes via a fixed random weighting so asymmetric gradients are exposed.
fn weighted(t: &Tape, x: &Tensor, seed: u64) -> Tensor {
    let mut r = rng(seed ^ 0x5eed);
    let w = Tensor::new(
        x.shape(),
        (0..x.len()).map(|_| r.random_range(-1.0..1.0)).collect(),
    );
    t.sum(&t.mul(x, &w), Axis::All)
}

#[test]
fn elementwise_binary_ops() {
    for i in 0..INSTANCES {
        let mut r = rng(100 + i as u64);
        let shape = rand_shape(&mut r);
        let a = rand_tensor(&mut r, &shape, -2.0, 2.0);
        // Divisor kept away from zero.
        let b = {
            let n: usize = shape.iter().product();
            Tensor::param(
                &shape,
                (0..n)
                    .map(|_| r.random_range(0.4..2.0) * if r.random_bool(0.5) { 1.0 } else { -1.0 })
                    .collect(),
            )
        };
        let s = i as u64;
        assert_grads(|t, xs| weighted(t, &t.add(&xs[0], &xs[1]), s), &[a.clone(), b.clone()], H, 1e-6);
        assert_grads(|t, xs| weighted(t, &t.sub(&xs[0], &xs[1]), s), &[a.clone(), b.clone()], H, 1e-6);
        assert_grads(|t, xs| weighted(t, &t.mul(&xs[0], &xs[1]), s), &[a.clone(), b.clone()], H, 1e-6);
        assert_grads(|t, xs| weighted(t, &t.div(&xs[0], &xs[1]), s), &[a, b], H, 1e-4);
    }
}

#[test]
fn elementwise_binary_ops_broadcast() {
    for i in 0..INSTANCES {
        let mut r = rng(200 + i as u64);
        let full: Vec<usize> = (0..3).map(|_| r.random_range(2..=4)).collect();
        // Partner shape: trailing suffix with random axes degenerated to 1.
        let keep = r.random_range(1..=3);
        let mut small: Vec<usize> = full[3 - keep..].to_vec();
        for d in small.iter_mut() {
            if r.random_bool(0.4) {
                *d = 1;
            }
        }
        let a = rand_tensor(&mut r, &full, -2.0, 2.0);
        let b = rand_tensor(&mut r, &small, -2.0, 2.0);
        let s = i as u64;
        assert_grads(|t, xs| weighted(t, &t.add(&xs[0], &xs[1]), s), &[a.clone(), b.clone()], H, 1e-6);
        assert_grads(|t, xs| weighted(t, &t.mul(&xs[0], &xs[1]), s), &[a, b], H, 1e-6);
    }
}

#[test]
fn elementwise_unary_ops() {
    for i in 0..INSTANCES {
        let mut r = rng(300 + i as u64);
        let shape = rand_shape(&mut r);
        let s = i as u64;
        let x = rand_tensor(&mut r, &shape, -2.0, 2.0);
        assert_grads(|t, xs| weighted(t, &t.neg(&xs[0]), s), &[x.clone()], H, 1e-6);
        assert_grads(|t, xs| weighted(t, &t.affine(&xs[0], 1.7, -0.3), s), &[x.clone()], H, 1e-6);
        assert_grads(|t, xs| weighted(t, &t.exp(&xs[0]), s), &[x.clone()], H, 1e-5);
        assert_grads(|t, xs| weighted(t, &t.tanh(&xs[0]), s), &[x.clone()], H, 1e-5);
        assert_grads(|t, xs| weighted(t, &t.sigmoid(&xs[0]), s), &[x], H, 1e-6);
        let pos = rand_tensor(&mut r, &shape, 0.2, 3.0);
        assert_grads(|t, xs| weighted(t, &t.log(&xs[0]), s), &[pos.clone()], H, 1e-5);
        assert_grads(|t, xs| weighted(t, &t.sqrt(&xs[0]), s), &[pos], H, 1e-5);
        // ReLU checked away from its kink.
        let n: usize = shape.iter().product();
        let off = Tensor::param(
            &shape,
            (0..n)
                .map(|_| r.random_range(0.1..2.0) * if r.random_bool(0.5) { 1.0 } else { -1.0 })
                .collect(),
        );
        assert_grads(|t, xs| weighted(t, &t.relu(&xs[0]), s), &[off], H, 1e-6);
    }
}

#[test]
fn matmul_matches_finite_differences() {
    for i in 0..INSTANCES {
        let mut r = rng(400 + i as u64);
        let (m, k, n) = (
            r.random_range(1..=4),
            r.random_range(1..=4),
            r.random_range(1..=4),
        );
        let a = rand_tensor(&mut r, &[m, k], -1.0, 1.0);
        let b = rand_tensor(&mut r, &[k, n], -1.0, 1.0);
        assert_grads(
            |t, xs| weighted(t, &t.matmul(&xs[0], &xs[1]), i as u64),
            &[a, b],
            H,
            1e-6,
        );
    }
}

#[test]
fn matmul_4x3_3x2_sum_loss_is_tight() {
    // Linear op + central differences: error is rounding-level.
    for i in 0..INSTANCES {
        let mut r = rng(450 + i as u64);
        let a = rand_tensor(&mut r, &[4, 3], -1.0, 1.0);
        let b = rand_tensor(&mut r, &[3, 2], -1.0, 1.0);
        let rep = max_rel_err(
            |t, xs| t.sum(&t.matmul(&xs[0], &xs[1]), Axis::All),
            &[a, b],
            H,
        );
        assert!(rep.max_rel_err <= 1e-6, "rel err {}", rep.max_rel_err);
    }
}

#[test]
fn conv2d_matches_finite_differences() {
    for i in 0..INSTANCES {
        let mut r = rng(500 + i as u64);
        let (cin, cout) = (r.random_range(1..=2), r.random_range(1..=3));
        let x = rand_tensor(&mut r, &[1, cin, 5, 5], -1.0, 1.0);
        let k = rand_tensor(&mut r, &[cout, cin, 3, 3], -1.0, 1.0);
        let stride = r.random_range(1..=2);
        let pad = r.random_range(0..=1);
        assert_grads(
            |t, xs| weighted(t, &t.conv2d(&xs[0], &xs[1], stride, pad), i as u64),
            &[x, k],
            H,
            1e-5,
        );
    }
}

#[test]
fn unfold_matches_finite_differences() {
    for i in 0..INSTANCES {
        let mut r = rng(600 + i as u64);
        let x = rand_tensor(&mut r, &[2, 2, 4, 4], -1.0, 1.0);
        assert_grads(
            |t, xs| weighted(t, &t.unfold(&xs[0], 3, 3, 1, 1), i as u64),
            &[x],
            H,
            1e-6,
        );
    }
}

#[test]
fn softmax_matches_finite_differences() {
    for i in 0..INSTANCES {
        let mut r = rng(700 + i as u64);
        let rank = r.random_range(1..=3);
        let shape: Vec<usize> = (0..rank).map(|_| r.random_range(2..=4)).collect();
        let axis = r.random_range(0..rank);
        let x = rand_tensor(&mut r, &shape, -3.0, 3.0);
        assert_grads(
            |t, xs| weighted(t, &t.softmax(&xs[0], axis), i as u64),
            &[x],
            H,
            1e-5,
        );
    }
}

#[test]
fn reductions_match_finite_differences() {
    for i in 0..INSTANCES {
        let mut r = rng(800 + i as u64);
        let shape: Vec<usize> = (0..3).map(|_| r.random_range(2..=4)).collect();
        let axis = r.random_range(0..3);
        let x = rand_tensor(&mut r, &shape, -2.0, 2.0);
        let s = i as u64;
        assert_grads(|t, xs| weighted(t, &t.sum(&xs[0], Axis::At(axis)), s), &[x.clone()], H, 1e-6);
        assert_grads(|t, xs| weighted(t, &t.mean(&xs[0], Axis::At(axis)), s), &[x.clone()], H, 1e-6);
        assert_grads(|t, xs| t.sum(&xs[0], Axis::All), &[x.clone()], H, 1e-6);
        assert_grads(|t, xs| t.mean(&xs[0], Axis::All), &[x], H, 1e-6);
    }
}

#[test]
fn max_reduction_matches_finite_differences_away_from_ties() {
    for i in 0..INSTANCES {
        let mut r = rng(900 + i as u64);
        let shape: Vec<usize> = (0..2).map(|_| r.random_range(2..=4)).collect();
        let n: usize = shape.iter().product();
        // Well-separated values so ±h cannot flip the argmax.
        let mut vals: Vec<f64> = (0..n).map(|j| j as f64 * 0.5).collect();
        for v in vals.iter_mut() {
            *v += r.random_range(-0.1..0.1);
        }
        // Deterministic shuffle by swapping.
        for j in (1..n).rev() {
            vals.swap(j, r.random_range(0..=j));
        }
        let x = Tensor::param(&shape, vals);
        let axis = r.random_range(0..2);
        let s = i as u64;
        assert_grads(|t, xs| weighted(t, &t.max(&xs[0], Axis::At(axis)), s), &[x.clone()], H, 1e-6);
        assert_grads(|t, xs| t.max(&xs[0], Axis::All), &[x], H, 1e-6);
    }
}

#[test]
fn shape_ops_match_finite_differences() {
    for i in 0..INSTANCES {
        let mut r = rng(1000 + i as u64);
        let x = rand_tensor(&mut r, &[2, 3, 4], -1.0, 1.0);
        let y = rand_tensor(&mut r, &[2, 3, 4], -1.0, 1.0);
        let s = i as u64;
        assert_grads(
            |t, xs| weighted(t, &t.reshape(&xs[0], &[6, 4]), s),
            &[x.clone()],
            H,
            1e-6,
        );
        assert_grads(
            |t, xs| weighted(t, &t.permute(&xs[0], &[2, 0, 1]), s),
            &[x.clone()],
            H,
            1e-6,
        );
        assert_grads(
            |t, xs| weighted(t, &t.concat(&[&xs[0], &xs[1]], 1), s),
            &[x.clone(), y],
            H,
            1e-6,
        );
        let axis = r.random_range(0..3);
        let ext = [2, 3, 4][axis];
        let start = r.random_range(0..ext);
        let len = r.random_range(1..=ext - start);
        assert_grads(
            |t, xs| weighted(t, &t.slice(&xs[0], axis, start, len), s),
            &[x],
            H,
            1e-6,
        );
    }
}

#[test]
fn losses_match_finite_differences() {
    for i in 0..INSTANCES {
        let mut r = rng(1100 + i as u64);
        let b = r.random_range(2..=5);
        let logits = rand_tensor(&mut r, &[b], -2.0, 2.0);
        let targets: Vec<f64> = (0..b).map(|_| f64::from(r.random_bool(0.5))).collect();
        assert_grads(
            |t, xs| t.bce_with_logits(&xs[0], &targets),
            &[logits],
            H,
            1e-6,
        );
        let k = r.random_range(2..=4);
        let logits2 = rand_tensor(&mut r, &[b, k], -2.0, 2.0);
        let classes: Vec<usize> = (0..b).map(|_| r.random_range(0..k)).collect();
        assert_grads(
            |t, xs| t.cross_entropy_logits(&xs[0], &classes),
            &[logits2],
            H,
            1e-6,
        );
    }
}

#[test]
fn composite_expression_matches_finite_differences() {
    // A small network-shaped composite: affine → tanh → matmul → softmax → ce.
    for i in 0..INSTANCES {
        let mut r = rng(1200 + i as u64);
        let x = rand_tensor(&mut r, &[3, 4], -1.0, 1.0);
        let w = rand_tensor(&mut r, &[4, 3], -1.0, 1.0);
        let bias = rand_tensor(&mut r, &[3], -0.5, 0.5);
        let classes = vec![0usize, 2, 1];
        assert_grads(
            |t, xs| {
                let h = t.tanh(&t.matmul(&xs[0], &xs[1]));
                let z = t.add(&h, &xs[2]);
                t.cross_entropy_logits(&z, &classes)
            },
            &[x, w, bias],
            H,
            1e-5,
        );
    }
}
