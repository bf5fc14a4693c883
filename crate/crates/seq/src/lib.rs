//! Sequence-to-sequence model over proof-trace token streams: a gated
//! recurrent encoder-decoder with optional bilinear attention, trained by
//! exact gradients with SGD or Adam, decoded by beam search, and persisted
//! to a self-describing checkpoint format.

pub mod beam;
pub mod checkpoint;
pub mod model;
pub mod tensor;
pub mod train;

pub use beam::{beam_decode, next_token_log_probs, BeamHypothesis};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointError};
pub use model::{
    backward, forward_loss, init_model, Attention, ConfigError, ForwardCache, ModelConfig,
    ModelError, Parameters, SeqModel,
};
pub use tensor::Tensor;
pub use train::{train, Optimizer, TrainConfig, TrainError, TrainReport};
