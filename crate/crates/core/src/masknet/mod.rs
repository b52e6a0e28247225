//! The two-head masking network, its objectives and its trainer.

mod model;
mod network;
mod objective;
mod train;

pub use model::{init_model, Dense, MaskNetModel};
pub use network::{apply_mask_layer, forward, masks_from_heads, Gradients, NetOutputs, MASK_EPS};
pub use objective::{objective_df, objective_joint, Objective, Targets};
pub use train::{gradient, gradient_from_outputs, train, Optimizer, TrainConfig, TrainOutcome};
