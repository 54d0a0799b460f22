//! Recurrent guided-attention reasoning model, its comparison architectures,
//! and lesioned variants, all over the shared autodiff tensor stack.

mod config;
mod encoder;
mod model;
mod variants;

pub use config::GamrConfig;
pub use encoder::Encoder;
pub use model::{Ablation, ArtModel, Gamr, GamrRollout};
pub use variants::{build_variant, CnnModel, Model, RnModel, VariantKind};

use layers::{Checkpoint, LayersError};
use tensor::Tensor;

/// Total scalar parameter count of a named parameter list.
pub fn param_count(params: &[(String, Tensor)]) -> usize {
    params.iter().map(|(_, t)| t.len()).sum()
}

/// Snapshot named parameters into a checkpoint structure.
pub fn snapshot(params: &[(String, Tensor)], step: u64) -> Checkpoint {
    Checkpoint {
        tensors: params.iter().map(|(n, t)| (n.clone(), t.detached())).collect(),
        step,
    }
}

/// Copy checkpointed values into live parameters, matched by name.
pub fn restore(params: &[(String, Tensor)], ckpt: &Checkpoint) -> Result<(), LayersError> {
    for (name, t) in params {
        let saved = ckpt
            .get(name)
            .ok_or_else(|| LayersError::Format(format!("checkpoint is missing {name:?}")))?;
        if saved.shape() != t.shape() {
            return Err(LayersError::Format(format!(
                "checkpoint {name:?} has shape {:?}, model expects {:?}",
                saved.shape(),
                t.shape()
            )));
        }
        t.data_mut().copy_from_slice(&saved.data());
    }
    Ok(())
}
