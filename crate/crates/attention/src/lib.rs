//! Attention building blocks: scaled dot-product attention, multi-head
//! self-attention over channel-major feature maps, the spatial and
//! feature-based module variants, and the guided read-out step used by the
//! recurrent reasoning model.

mod guided;
mod mha;
mod scaled;

pub use guided::guided_attention_step;
pub use mha::{fbam_forward, mha_block, mha_block_detailed, sam_forward, MhaParams};
pub use scaled::{scaled_dot_attention, AttentionOutput};

/// Head width that worked best for the spatial module.
pub const SAM_WIDTH: usize = 512;
/// Head count that worked best for the spatial module.
pub const SAM_HEADS: usize = 4;
/// Head width that worked best for the feature-based module.
pub const FBAM_WIDTH: usize = 196;
/// Head count that worked best for the feature-based module.
pub const FBAM_HEADS: usize = 1;
