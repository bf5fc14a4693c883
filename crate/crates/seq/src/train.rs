//! Mini-batch training loop: seeded shuffling, gradient accumulation over
//! each batch, global-norm clipping, and SGD or Adam updates. Deterministic
//! and single-threaded.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::model::{backward, forward_loss, ModelError, Parameters, SeqModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Gradients with a larger global norm are rescaled to this; zero or
    /// non-finite disables clipping.
    pub clip_norm: f64,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: Optimizer::Adam,
            learning_rate: 1e-3,
            batch_size: 32,
            epochs: 10,
            clip_norm: 5.0,
            shuffle_seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("batch size must be at least 1")]
    ZeroBatchSize,
    #[error("loss became non-finite ({loss}) in epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize, loss: f64 },
}

/// Per-epoch, token-weighted mean losses, measured on each batch before its
/// update is applied.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub loss_curve: Vec<f64>,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

struct AdamState {
    m: Parameters,
    v: Parameters,
    step: u64,
}

fn apply_update(
    model: &mut SeqModel,
    grads: &Parameters,
    config: &TrainConfig,
    adam: &mut Option<AdamState>,
) {
    let lr = config.learning_rate;
    let gs: Vec<&crate::tensor::Tensor> =
        grads.named_tensors().into_iter().map(|(_, t)| t).collect();
    match adam {
        None => {
            for (p, g) in model.params.tensors_mut().into_iter().zip(gs) {
                for (pv, gv) in p.data_mut().iter_mut().zip(g.data()) {
                    *pv -= lr * gv;
                }
            }
        }
        Some(state) => {
            state.step += 1;
            let bc1 = 1.0 - ADAM_BETA1.powi(state.step as i32);
            let bc2 = 1.0 - ADAM_BETA2.powi(state.step as i32);
            let ms = state.m.tensors_mut();
            let vs = state.v.tensors_mut();
            for (((p, g), m), v) in model
                .params
                .tensors_mut()
                .into_iter()
                .zip(gs)
                .zip(ms)
                .zip(vs)
            {
                for (((pv, gv), mv), vv) in p
                    .data_mut()
                    .iter_mut()
                    .zip(g.data())
                    .zip(m.data_mut().iter_mut())
                    .zip(v.data_mut().iter_mut())
                {
                    *mv = ADAM_BETA1 * *mv + (1.0 - ADAM_BETA1) * gv;
                    *vv = ADAM_BETA2 * *vv + (1.0 - ADAM_BETA2) * gv * gv;
                    let mhat = *mv / bc1;
                    let vhat = *vv / bc2;
                    *pv -= lr * mhat / (vhat.sqrt() + ADAM_EPS);
                }
            }
        }
    }
}

/// Runs `config.epochs` passes over `data`, mutating the model in place.
/// A non-finite batch loss aborts with a diagnostic instead of continuing.
pub fn train(
    model: &mut SeqModel,
    data: &[(Vec<u32>, Vec<u32>)],
    config: &TrainConfig,
) -> Result<TrainReport, TrainError> {
    if config.batch_size == 0 {
        return Err(TrainError::ZeroBatchSize);
    }
    if data.is_empty() {
        return Err(ModelError::EmptyBatch.into());
    }
    if data.iter().all(|(_, tgt)| tgt.is_empty()) {
        return Err(ModelError::NoTargetTokens.into());
    }
    let mut adam = match config.optimizer {
        Optimizer::Sgd => None,
        Optimizer::Adam => Some(AdamState {
            m: Parameters::zeros(&model.config),
            v: Parameters::zeros(&model.config),
            step: 0,
        }),
    };
    let mut rng = ChaCha20Rng::seed_from_u64(config.shuffle_seed);
    let mut indices: Vec<usize> = (0..data.len()).collect();
    let mut loss_curve = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        indices.shuffle(&mut rng);
        let mut nll_sum = 0.0;
        let mut token_sum = 0usize;
        for (b, chunk) in indices.chunks(config.batch_size).enumerate() {
            let batch: Vec<(Vec<u32>, Vec<u32>)> =
                chunk.iter().map(|&i| data[i].clone()).collect();
            let (loss, cache) = match forward_loss(model, &batch) {
                Ok(out) => out,
                // A batch made up entirely of empty targets carries no signal.
                Err(ModelError::NoTargetTokens) => continue,
                Err(e) => return Err(e.into()),
            };
            if !loss.is_finite() {
                return Err(TrainError::Diverged { epoch, batch: b, loss });
            }
            nll_sum += loss * cache.total_tokens() as f64;
            token_sum += cache.total_tokens();
            let mut grads = backward(model, &cache);
            if config.clip_norm > 0.0 && config.clip_norm.is_finite() {
                let norm = grads.global_norm();
                if norm > config.clip_norm {
                    grads.scale(config.clip_norm / norm);
                }
            }
            apply_update(model, &grads, config, &mut adam);
        }
        loss_curve.push(nll_sum / token_sum as f64);
    }
    Ok(TrainReport { loss_curve })
}
