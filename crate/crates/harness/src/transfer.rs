//! Zero-shot rule transfer: evaluate a model on a task it never trained on,
//! restricted to pairs whose shared rule lands on the same label polarity.

use gamr::Model;
use svrt_gen::Dataset;

use crate::train::evaluate_svrt;
use crate::HarnessError;

/// (train task, test task) pairs that share an elementary relation with
/// matching category polarity.
pub const TRANSFER_PAIRS: [(u32, u32); 9] = [
    (1, 5),
    (1, 15),
    (1, 22),
    (5, 1),
    (5, 15),
    (5, 22),
    (7, 22),
    (21, 15),
    (23, 8),
];

/// Identity pairs are trivially aligned; everything else must be vetted.
pub fn pair_aligned(train: u32, test: u32) -> bool {
    train == test || TRANSFER_PAIRS.contains(&(train, test))
}

/// Evaluates with zero gradient updates. `model` must have been trained on
/// `train_task` only; `test_split` is the held-out split of `test_task`.
pub fn zero_shot_transfer(
    model: &Model,
    train_task: u32,
    test_task: u32,
    test_split: &Dataset,
) -> Result<f64, HarnessError> {
    if !pair_aligned(train_task, test_task) {
        return Err(HarnessError::MisalignedPair { train: train_task, test: test_task });
    }
    Ok(evaluate_svrt(model, test_split))
}
