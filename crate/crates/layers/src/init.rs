//! Seeded weight initialization: Kaiming-uniform fan-in scaling for conv/linear
//! weights, orthogonal blocks for recurrent weights.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use tensor::Tensor;

/// Uniform in ±√(6/fan_in) — the ReLU-gain Kaiming bound.
pub fn kaiming_uniform(rng: &mut ChaCha12Rng, shape: &[usize], fan_in: usize) -> Tensor {
    assert!(fan_in > 0, "kaiming_uniform: fan_in must be positive");
    uniform(rng, shape, (6.0 / fan_in as f64).sqrt())
}

/// Uniform in ±bound. Bias vectors use `bound = 1/√fan_in`; a bias drawn this
/// way (rather than zeroed) keeps recurrent state and gate preactivations off
/// the all-zeros fixed point at the first step.
pub fn uniform(rng: &mut ChaCha12Rng, shape: &[usize], bound: f64) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::param(shape, (0..n).map(|_| rng.random_range(-bound..bound)).collect())
}

/// Square orthogonal matrix via modified Gram-Schmidt on a Gaussian sample.
fn orthogonal_square(rng: &mut ChaCha12Rng, n: usize) -> Vec<f64> {
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| standard_normal(rng)).collect())
        .collect();
    for j in 0..n {
        for i in 0..j {
            let dot: f64 = cols[j].iter().zip(&cols[i]).map(|(a, b)| a * b).sum();
            for k in 0..n {
                cols[j][k] -= dot * cols[i][k];
            }
        }
        let norm: f64 = cols[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm > 1e-12, "orthogonal init: degenerate column");
        for v in &mut cols[j] {
            *v /= norm;
        }
    }
    // cols are orthonormal columns; emit row-major.
    let mut out = vec![0.0; n * n];
    for (j, col) in cols.iter().enumerate() {
        for i in 0..n {
            out[i * n + j] = col[i];
        }
    }
    out
}

/// Stacked orthogonal blocks: a `[k·n, n]` matrix whose `k` row blocks are each
/// orthogonal — the usual treatment for an LSTM's hidden-to-hidden weights.
pub fn orthogonal_stacked(rng: &mut ChaCha12Rng, k: usize, n: usize) -> Tensor {
    let mut data = Vec::with_capacity(k * n * n);
    for _ in 0..k {
        data.extend(orthogonal_square(rng, n));
    }
    Tensor::param(&[k * n, n], data)
}

/// Box-Muller draw, kept local so initialization depends only on the ChaCha stream.
fn standard_normal(rng: &mut ChaCha12Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
