//! Trainable layers and the optimizer: linear maps, an LSTM cell, layer/instance
//! normalization, 2-D convolution, Adam with decoupled weight decay, seeded
//! weight initialization, and a named-tensor checkpoint format.

mod adam;
mod checkpoint;
mod conv;
pub mod init;
mod linear;
mod lstm;
mod norm;

pub use adam::Adam;
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use conv::Conv2d;
pub use linear::Linear;
pub use lstm::LstmCell;
pub use norm::{NormKind, NormLayer};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LayersError {
    #[error("non-finite gradient in parameter {name:?}; refusing to update")]
    NonFiniteGradient { name: String },
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint format: {0}")]
    Format(String),
}
