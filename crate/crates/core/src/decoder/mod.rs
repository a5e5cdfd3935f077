//! The latent-conditioned distance decoder, its losses and auto-decoder training.

mod checkpoint;
mod field;
mod loss;
mod network;
mod train;

pub use checkpoint::Checkpoint;
pub use field::{decode_grid, CullConfig, LatentField};
pub use loss::{
    loss_clamped_l1, loss_clamped_l1_grad, loss_geo_reg, loss_latent_reg, lr_at_epoch, total_loss, LossBreakdown,
    TrainConfig,
};
pub use network::{fourier_backward, fourier_encode, INITIAL_OUTPUT, Activation, Decoder, DecoderConfig, DecoderEval, Layer, ParamGradients};
pub use train::{mean_clamped_l1, train_auto_decoder, Adam, EpochStats, LatentLibrary, TrainOutput};
