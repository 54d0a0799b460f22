//! Central finite-difference oracle for gradient verification.
//!
//! Every differentiable operation in this workspace is validated against this
//! module: the analytic gradient from [`Tape::backward`] is compared with
//! `(f(x+h) - f(x-h)) / 2h` per element, in 64-bit arithmetic.

use crate::{Tape, Tensor};

/// Outcome of one gradient comparison.
#[derive(Debug, Clone, Copy)]
pub struct GradCheck {
    /// Largest `|analytic - numeric| / max(1, |analytic|, |numeric|)` seen.
    pub max_rel_err: f64,
    /// Location of the worst element: (input index, element index).
    pub worst_at: (usize, usize),
    pub worst_analytic: f64,
    pub worst_numeric: f64,
    /// Number of elements compared.
    pub checked: usize,
}

/// Compares analytic and central-difference gradients of a scalar-valued
/// function at every element of every input.
///
/// `f` must be deterministic and must read the inputs it differentiates through
/// the handles it is given (perturbations are applied in place).
pub fn max_rel_err<F>(f: F, inputs: &[Tensor], h: f64) -> GradCheck
where
    F: Fn(&Tape, &[Tensor]) -> Tensor,
{
    check_sampled(f, inputs, h, usize::MAX)
}

/// As [`max_rel_err`], but comparing at most `max_per_input` evenly spaced
/// elements of each input — for whole-model checks where exhaustive probing
/// would be slow.
pub fn check_sampled<F>(f: F, inputs: &[Tensor], h: f64, max_per_input: usize) -> GradCheck
where
    F: Fn(&Tape, &[Tensor]) -> Tensor,
{
    assert!(h > 0.0, "gradcheck: step size must be positive");
    let tape = Tape::new();
    for t in inputs {
        tape.watch(t);
    }
    let loss = f(&tape, inputs);
    assert_eq!(
        loss.len(),
        1,
        "gradcheck: function must return a scalar, got shape {:?}",
        loss.shape()
    );
    let gm = tape.backward(&loss);
    // Snapshot all analytic gradients now: the numeric re-evaluations below bind
    // the inputs to fresh tapes, invalidating lookups against this recording.
    let analytic: Vec<Vec<f64>> = inputs
        .iter()
        .map(|t| {
            gm.wrt(t)
                .expect("gradcheck: input never reached the tape — does f consume it?")
        })
        .collect();
    let mut report = GradCheck {
        max_rel_err: 0.0,
        worst_at: (0, 0),
        worst_analytic: 0.0,
        worst_numeric: 0.0,
        checked: 0,
    };
    for (ti, t) in inputs.iter().enumerate() {
        let analytic = &analytic[ti];
        let n = t.len();
        let stride = n.div_ceil(max_per_input.min(n).max(1)).max(1);
        for ei in (0..n).step_by(stride) {
            let saved = t.data()[ei];
            t.data_mut()[ei] = saved + h;
            let up = f(&Tape::new(), inputs).item();
            t.data_mut()[ei] = saved - h;
            let down = f(&Tape::new(), inputs).item();
            t.data_mut()[ei] = saved;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic[ei];
            let rel = (a - numeric).abs() / 1.0_f64.max(a.abs()).max(numeric.abs());
            report.checked += 1;
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
                report.worst_at = (ti, ei);
                report.worst_analytic = a;
                report.worst_numeric = numeric;
            }
        }
    }
    report
}

/// Asserts the finite-difference check passes within `tol`.
pub fn assert_grads<F>(f: F, inputs: &[Tensor], h: f64, tol: f64)
where
    F: Fn(&Tape, &[Tensor]) -> Tensor,
{
    let r = max_rel_err(f, inputs, h);
    assert!(
        r.max_rel_err <= tol,
        "gradient check failed: rel err {:.3e} > {tol:.1e} at input {} elem {} \
         (analytic {:.9e}, numeric {:.9e}; {} elements checked)",
        r.max_rel_err,
        r.worst_at.0,
        r.worst_at.1,
        r.worst_analytic,
        r.worst_numeric,
        r.checked
    );
}
