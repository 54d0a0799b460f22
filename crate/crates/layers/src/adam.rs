//! Adam with decoupled weight decay.

use tensor::{GradMap, Tensor};

use crate::LayersError;

struct Slot {
    param: Tensor,
    name: String,
    m: Vec<f64>,
    v: Vec<f64>,
}

pub struct Adam {
    slots: Vec<Slot>,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    t: u64,
}

impl Adam {
    pub fn new(params: Vec<(String, Tensor)>, lr: f64, weight_decay: f64) -> Self {
        let slots = params
            .into_iter()
            .map(|(name, param)| {
                let n = param.len();
                Slot { param, name, m: vec![0.0; n], v: vec![0.0; n] }
            })
            .collect();
        Adam { slots, lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay, t: 0 }
    }

    pub fn param_count(&self) -> usize {
        self.slots.iter().map(|s| s.param.len()).sum()
    }

    /// Applies one update from `grads`. Parameters the tape never reached get
    /// zero gradient and move only under weight decay. Rejects non-finite
    /// gradients before touching any state, so a failed step can be retried.
    pub fn step(&mut self, grads: &GradMap) -> Result<(), LayersError> {
        let per_slot: Vec<Option<Vec<f64>>> = self.slots.iter().map(|s| grads.wrt(&s.param)).collect();
        for (slot, g) in self.slots.iter().zip(&per_slot) {
            if let Some(g) = g {
                if g.iter().any(|v| !v.is_finite()) {
                    return Err(LayersError::NonFiniteGradient { name: slot.name.clone() });
                }
            }
        }

        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (slot, g) in self.slots.iter_mut().zip(per_slot) {
            let zero;
            let g = match &g {
                Some(g) => &g[..],
                None => {
                    zero = vec![0.0; slot.param.len()];
                    &zero
                }
            };
            let mut data = slot.param.data_mut();
            for i in 0..data.len() {
                slot.m[i] = self.beta1 * slot.m[i] + (1.0 - self.beta1) * g[i];
                slot.v[i] = self.beta2 * slot.v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = slot.m[i] / bc1;
                let v_hat = slot.v[i] / bc2;
                data[i] -= self.lr * (m_hat / (v_hat.sqrt() + self.eps) + self.weight_decay * data[i]);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tensor::{Axis, Tape};

    fn named(t: &Tensor) -> Vec<(String, Tensor)> {
        vec![("w".into(), t.clone())]
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let w = Tensor::param(&[2], vec![1.0, -2.0]);
        let mut opt = Adam::new(named(&w), 0.1, 0.0);
        let tape = Tape::new();
        let loss = tape.sum(&tape.mul(&w, &Tensor::new(&[2], vec![3.0, -5.0])), Axis::All);
        let g = tape.backward(&loss);
        opt.step(&g).unwrap();
        // With fresh moments, the bias-corrected update is lr·sign(g).
        let d = w.to_vec();
        assert!((d[0] - (1.0 - 0.1)).abs() < 1e-6);
        assert!((d[1] - (-2.0 + 0.1)).abs() < 1e-6);
    }

    #[test]
    fn converges_on_quadratic() {
        let w = Tensor::param(&[1], vec![0.0]);
        let mut opt = Adam::new(named(&w), 0.05, 0.0);
        let mut tape = Tape::new();
        for _ in 0..2000 {
            tape.reset();
            let diff = tape.affine(&w, 1.0, -5.0);
            let loss = tape.sum(&tape.mul(&diff, &diff), Axis::All);
            let g = tape.backward(&loss);
            opt.step(&g).unwrap();
        }
        assert!((w.to_vec()[0] - 5.0).abs() < 1e-3, "got {}", w.to_vec()[0]);
    }

    #[test]
    fn unreached_params_only_decay() {
        let used = Tensor::param(&[1], vec![1.0]);
        let unused = Tensor::param(&[1], vec![4.0]);
        let mut opt = Adam::new(
            vec![("used".into(), used.clone()), ("unused".into(), unused.clone())],
            0.1,
            0.5,
        );
        let tape = Tape::new();
        let loss = tape.sum(&tape.mul(&used, &used), Axis::All);
        let g = tape.backward(&loss);
        opt.step(&g).unwrap();
        // unused: w ← w − lr·wd·w = 4 − 0.1·0.5·4.
        assert!((unused.to_vec()[0] - (4.0 - 0.1 * 0.5 * 4.0)).abs() < 1e-12);
    }

    #[test]
    fn non_finite_gradient_leaves_weights_untouched() {
        let w = Tensor::param(&[1], vec![2.0]);
        let mut opt = Adam::new(named(&w), 0.1, 0.0);
        let tape = Tape::new();
        // log(x) at x→0⁺ explodes; drive the gradient to infinity via 1/x².
        let inv = tape.div(&Tensor::new(&[1], vec![1.0]), &tape.mul(&w, &w));
        let huge = tape.affine(&inv, 1e308, 0.0);
        let loss = tape.sum(&tape.mul(&huge, &huge), Axis::All);
        let g = tape.backward(&loss);
        let err = opt.step(&g);
        assert!(matches!(err, Err(LayersError::NonFiniteGradient { .. })));
        assert_eq!(w.to_vec(), vec![2.0]);
    }
}
