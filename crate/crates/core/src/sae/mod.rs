//! The sparse autoencoder: `x ≈ b_dec + Σᵢ fᵢ(x)·dᵢ` with
//! `f(x) = ReLU(W_enc·x + b_enc)`, trained on squared reconstruction error
//! plus an L1 penalty on feature activations weighted by decoder column norms.

mod config;
mod io;
mod model;
mod objective;
mod train;

pub use config::{layer_defaults, LayerDefaults, TrainConfig, TABLE_DEFAULTS};
pub use io::{load_model, model_file_len, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use model::{Param, SaeModel, INIT_DECODER_NORM};
pub use objective::{Gradients, LossBreakdown};
pub use train::{reconstruction_mse, train, IntervalLoss, TrainReport};
