//! Reverse-mode automatic differentiation over dense n-dimensional `f64` arrays.
//!
//! The engine is define-by-run: a [`Tape`] records every operation that touches a
//! tracked tensor, and [`Tape::backward`] walks the recording in reverse to produce
//! gradients. Tensors are cheap handles (`Rc` inside); cloning one never copies the
//! underlying buffer.
//!
//! Shape or domain misuse (mismatched operands, `log` of a non-positive value,
//! division by zero, non-scalar loss) panics with a message naming the offending
//! shapes or values — the same convention ndarray uses for dimension errors. These
//! are programmer errors, not runtime conditions to recover from.

mod broadcast;
pub mod gradcheck;
mod ops;
mod tape;
mod tensor;

pub use tape::{GradMap, Tape};
pub use tensor::Tensor;

/// Reduction target: a single axis or the whole tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Reduce over every element, producing a scalar.
    All,
    /// Reduce over one axis, removing it from the shape.
    At(usize),
}
