//! Single LSTM cell with stacked gate weights.
//!
//! Weights hold all four gates in one matrix, rows ordered (input, forget,
//! cell, output). One matmul per step computes every pre-activation; the
//! result is sliced into the four `[batch, hidden]` gate blocks.

use rand_chacha::ChaCha12Rng;
use tensor::{Tape, Tensor};

use crate::init::{kaiming_uniform, orthogonal_stacked, uniform};

#[derive(Debug)]
pub struct LstmCell {
    /// `[4·hidden, input]`
    pub w_ih: Tensor,
    /// `[4·hidden, hidden]`
    pub w_hh: Tensor,
    /// `[4·hidden]`, forget-gate rows centered on +1.
    pub bias: Tensor,
    hidden: usize,
}

impl LstmCell {
    pub fn new(rng: &mut ChaCha12Rng, input: usize, hidden: usize) -> Self {
        let bias = uniform(rng, &[4 * hidden], 1.0 / (hidden as f64).sqrt());
        {
            // Forget gate opens the memory path at the start of training.
            let mut b = bias.data_mut();
            for v in b.iter_mut().skip(hidden).take(hidden) {
                *v += 1.0;
            }
        }
        LstmCell {
            w_ih: kaiming_uniform(rng, &[4 * hidden, input], input),
            w_hh: orthogonal_stacked(rng, 4, hidden),
            bias,
            hidden,
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    pub fn input_size(&self) -> usize {
        self.w_ih.shape()[1]
    }

    /// Zero-filled `(h, c)` for a fresh sequence.
    pub fn zero_state(&self, batch: usize) -> (Tensor, Tensor) {
        (Tensor::zeros(&[batch, self.hidden]), Tensor::zeros(&[batch, self.hidden]))
    }

    /// One step: `x` is `[batch, input]`, state tensors are `[batch, hidden]`.
    pub fn forward(&self, tape: &Tape, x: &Tensor, h: &Tensor, c: &Tensor) -> (Tensor, Tensor) {
        let gates_x = tape.matmul(x, &tape.permute(&self.w_ih, &[1, 0]));
        let gates_h = tape.matmul(h, &tape.permute(&self.w_hh, &[1, 0]));
        let pre = tape.add(&tape.add(&gates_x, &gates_h), &self.bias);

        let n = self.hidden;
        let i = tape.sigmoid(&tape.slice(&pre, 1, 0, n));
        let f = tape.sigmoid(&tape.slice(&pre, 1, n, n));
        let g = tape.tanh(&tape.slice(&pre, 1, 2 * n, n));
        let o = tape.sigmoid(&tape.slice(&pre, 1, 3 * n, n));

        let c_next = tape.add(&tape.mul(&f, c), &tape.mul(&i, &g));
        let h_next = tape.mul(&o, &tape.tanh(&c_next));
        (h_next, c_next)
    }

    pub fn params(&self) -> Vec<Tensor> {
        vec![self.w_ih.clone(), self.w_hh.clone(), self.bias.clone()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use tensor::gradcheck;

    fn zeroed(cell: &mut LstmCell) {
        let n = cell.hidden;
        cell.w_ih = Tensor::param(&[4 * n, cell.input_size()], vec![0.0; 4 * n * cell.input_size()]);
        cell.w_hh = Tensor::param(&[4 * n, n], vec![0.0; 4 * n * n]);
        cell.bias = Tensor::param(&[4 * n], vec![0.0; 4 * n]);
    }

    #[test]
    fn zero_weights_give_zero_state_update() {
        let mut cell = LstmCell::new(&mut ChaCha12Rng::seed_from_u64(0), 3, 4);
        zeroed(&mut cell);
        let tape = Tape::new();
        let x = Tensor::new(&[2, 3], vec![1.0; 6]);
        let (h0, c0) = cell.zero_state(2);
        let (h1, c1) = cell.forward(&tape, &x, &h0, &c0);
        // All gates sit at σ(0)=0.5 and tanh(0)=0, so c' = 0.5·0 + 0.5·0 = 0.
        assert!(h1.to_vec().iter().all(|v| *v == 0.0));
        assert!(c1.to_vec().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn hidden_state_stays_in_unit_interval() {
        let cell = LstmCell::new(&mut ChaCha12Rng::seed_from_u64(9), 6, 5);
        let tape = Tape::new();
        let mut state = cell.zero_state(4);
        for step in 0..8 {
            let x = Tensor::new(&[4, 6], (0..24).map(|v| ((v + step) % 7) as f64 - 3.0).collect());
            state = cell.forward(&tape, &x, &state.0, &state.1);
        }
        // |h| = |o·tanh(c)| < 1 always.
        assert!(state.0.to_vec().iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn forget_bias_centered_on_one() {
        let cell = LstmCell::new(&mut ChaCha12Rng::seed_from_u64(2), 3, 4);
        let b = cell.bias.to_vec();
        let k = 1.0 / 2.0; // 1/√hidden
        assert!(b[0..4].iter().all(|v| v.abs() < k));
        assert!(b[4..8].iter().all(|v| (v - 1.0).abs() < k));
        assert!(b[8..].iter().all(|v| v.abs() < k));
    }

    #[test]
    fn unrolled_gradients_match_finite_differences() {
        let cell = LstmCell::new(&mut ChaCha12Rng::seed_from_u64(31), 3, 4);
        let xs: Vec<Tensor> = (0..4)
            .map(|s| Tensor::new(&[2, 3], (0..6).map(|v| ((v * 3 + s * 7) % 11) as f64 * 0.15 - 0.8).collect()))
            .collect();
        let inputs = [cell.w_ih.clone(), cell.w_hh.clone(), cell.bias.clone()];
        gradcheck::assert_grads(
            |tape, p| {
                let c = LstmCell { w_ih: p[0].clone(), w_hh: p[1].clone(), bias: p[2].clone(), hidden: 4 };
                let (mut h, mut cc) = c.zero_state(2);
                for x in &xs {
                    let (h2, c2) = c.forward(tape, x, &h, &cc);
                    h = h2;
                    cc = c2;
                }
                tape.sum(&tape.mul(&h, &h), tensor::Axis::All)
            },
            &inputs,
            1e-5,
            1e-4,
        );
    }
}
