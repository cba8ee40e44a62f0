//! The trainable classification head: a dropout-regularized linear layer with
//! per-label sigmoid outputs, smoothed binary cross-entropy with analytic
//! gradients, AdamW with global-norm clipping, and threshold inference.
//!
//! Everything here is plain f64 with a fixed reduction order, so a seeded run
//! reproduces bit-for-bit.

mod checkpoint;
mod train;

pub use checkpoint::{load_model, save_model};
pub use train::{predictions_for_split, train_head, train_head_with_eval, EmbeddedSplit};

use thiserror::Error;

use crate::datasets::LabelSchema;
use crate::embeddings::EmbeddingError;
use crate::rng::SplitMix64;

#[derive(Debug, Error)]
pub enum HeadError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("bad train config: {0}")]
    Config(String),
    #[error("{0} split is empty")]
    EmptySplit(&'static str),
    #[error("no embedding for key {0:?}")]
    MissingEmbedding(String),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Weights and biases of the linear layer: L rows of D weights plus L biases.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl HeadParams {
    pub fn zeros(labels: usize, dim: usize) -> Self {
        Self {
            weights: vec![vec![0.0; dim]; labels],
            bias: vec![0.0; labels],
        }
    }

    /// Uniform(-1/sqrt(D), +1/sqrt(D)) init drawn from `rng` in a fixed order:
    /// weight rows first, then biases.
    pub fn init(labels: usize, dim: usize, rng: &mut SplitMix64) -> Self {
        let bound = 1.0 / (dim as f64).sqrt();
        let weights = (0..labels)
            .map(|_| (0..dim).map(|_| rng.uniform(-bound, bound)).collect())
            .collect();
        let bias = (0..labels).map(|_| rng.uniform(-bound, bound)).collect();
        Self { weights, bias }
    }

    pub fn label_count(&self) -> usize {
        self.bias.len()
    }

    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// Stable hash of the exact parameter bits, for checkpoint comparison.
    pub fn fingerprint(&self) -> String {
        let mut hash = 0xcbf2_9ce4_8422_2325u64;
        let mut feed = |value: f64| {
            for byte in value.to_bits().to_le_bytes() {
                hash = (hash ^ byte as u64).wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for row in &self.weights {
            for &v in row {
                feed(v);
            }
        }
        for &v in &self.bias {
            feed(v);
        }
        format!("{hash:016x}")
    }
}

/// Gradients with the same shapes as [`HeadParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct HeadGrads {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl HeadGrads {
    pub fn zeros(labels: usize, dim: usize) -> Self {
        Self {
            weights: vec![vec![0.0; dim]; labels],
            bias: vec![0.0; labels],
        }
    }

    pub fn global_norm(&self) -> f64 {
        let mut sum = 0.0;
        for row in &self.weights {
            for v in row {
                sum += v * v;
            }
        }
        for v in &self.bias {
            sum += v * v;
        }
        sum.sqrt()
    }
}

/// Every training hyperparameter in one place.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub dropout_rate: f64,
    pub smoothing_alpha: f64,
    pub clip_max_norm: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.01,
            batch_size: 16,
            dropout_rate: 0.3,
            smoothing_alpha: 0.1,
            clip_max_norm: 1.0,
            patience: 4,
            max_epochs: 100,
            threshold: 0.5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), HeadError> {
        if self.batch_size == 0 {
            return Err(HeadError::Config("batch_size must be at least 1".into()));
        }
        if self.patience == 0 {
            return Err(HeadError::Config("patience must be at least 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(HeadError::Config("max_epochs must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(HeadError::Config("dropout_rate must be in [0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.smoothing_alpha) {
            return Err(HeadError::Config("smoothing_alpha must be in [0, 1]".into()));
        }
        if self.clip_max_norm <= 0.0 {
            return Err(HeadError::Config("clip_max_norm must be positive".into()));
        }
        Ok(())
    }
}

/// AdamW moment accumulators and step counter.
#[derive(Debug, Clone)]
pub struct AdamWState {
    pub m: HeadGrads,
    pub v: HeadGrads,
    pub t: u64,
}

impl AdamWState {
    pub fn zeros(labels: usize, dim: usize) -> Self {
        Self {
            m: HeadGrads::zeros(labels, dim),
            v: HeadGrads::zeros(labels, dim),
            t: 0,
        }
    }
}

/// Loss and dev score for one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_macro_f1: f64,
}

/// A trained head together with everything needed to use and audit it.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub params: HeadParams,
    pub schema: LabelSchema,
    pub embedder_fingerprint: String,
    pub threshold: f64,
    pub config: TrainConfig,
    pub history: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (1-based).
    pub best_epoch: usize,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Forward-pass mode: plain inference, or training with an inverted-dropout
/// mask over the input embedding.
#[derive(Debug, Clone, Copy)]
pub enum ForwardMode<'a> {
    Eval,
    Train { mask: &'a [u8], dropout_rate: f64 },
}

/// Per-label probabilities `sigmoid(W x + b)`. In train mode the input is
/// masked and survivors are scaled by `1 / (1 - dropout_rate)` so inference
/// needs no rescaling.
pub fn forward(params: &HeadParams, x: &[f64], mode: ForwardMode) -> Result<Vec<f64>, HeadError> {
    if x.len() != params.dim() {
        return Err(HeadError::DimMismatch {
            expected: params.dim(),
            got: x.len(),
        });
    }
    let effective: Vec<f64> = match mode {
        ForwardMode::Eval => x.to_vec(),
        ForwardMode::Train { mask, dropout_rate } => {
            if mask.len() != x.len() {
                return Err(HeadError::DimMismatch {
                    expected: x.len(),
                    got: mask.len(),
                });
            }
            let keep = 1.0 - dropout_rate;
            x.iter()
                .zip(mask.iter())
                .map(|(v, &m)| if m == 1 { v / keep } else { 0.0 })
                .collect()
        }
    };
    Ok(logits(params, &effective).into_iter().map(sigmoid).collect())
}

fn logits(params: &HeadParams, x: &[f64]) -> Vec<f64> {
    params
        .weights
        .iter()
        .zip(params.bias.iter())
        .map(|(row, b)| row.iter().zip(x.iter()).map(|(w, v)| w * v).sum::<f64>() + b)
        .collect()
}

/// Pull hard 0/1 targets toward 0.5: `y' = y (1 - alpha) + alpha / 2`.
pub fn smooth_targets(y: &[u8], alpha: f64) -> Vec<f64> {
    y.iter()
        .map(|&v| v as f64 * (1.0 - alpha) + alpha / 2.0)
        .collect()
}

/// Mean binary cross-entropy of probabilities against smoothed targets.
pub fn bce_loss(probs: &[f64], targets: &[f64]) -> Result<f64, HeadError> {
    if probs.len() != targets.len() {
        return Err(HeadError::DimMismatch {
            expected: targets.len(),
            got: probs.len(),
        });
    }
    // Clamp only inside the logs; saturated sigmoids would otherwise hit ln(0).
    let total: f64 = probs
        .iter()
        .zip(targets.iter())
        .map(|(&p, &t)| {
            let p = p.clamp(1e-12, 1.0 - 1e-12);
            -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
        })
        .sum();
    Ok(total / probs.len() as f64)
}

/// Batch-mean loss and its analytic gradients.
///
/// Per sample the gradient w.r.t. logit `i` is `(p_i - y'_i) / L`,
/// backpropagated through the masked, scaled input into `W` and `b`, then
/// averaged over the batch.
pub fn loss_and_grads(
    params: &HeadParams,
    xs: &[Vec<f64>],
    ys: &[Vec<u8>],
    config: &TrainConfig,
    masks: Option<&[Vec<u8>]>,
) -> Result<(f64, HeadGrads), HeadError> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(HeadError::DimMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if let Some(masks) = masks {
        if masks.len() != xs.len() {
            return Err(HeadError::DimMismatch {
                expected: xs.len(),
                got: masks.len(),
            });
        }
    }
    let labels = params.label_count();
    let dim = params.dim();
    let batch = xs.len() as f64;
    let keep = 1.0 - config.dropout_rate;
    let mut grads = HeadGrads::zeros(labels, dim);
    let mut total_loss = 0.0;

    for (s, (x, y)) in xs.iter().zip(ys.iter()).enumerate() {
        if x.len() != dim {
            return Err(HeadError::DimMismatch {
                expected: dim,
                got: x.len(),
            });
        }
        if y.len() != labels {
            return Err(HeadError::DimMismatch {
                expected: labels,
                got: y.len(),
            });
        }
        let effective: Vec<f64> = match masks {
            Some(masks) => x
                .iter()
                .zip(masks[s].iter())
                .map(|(v, &m)| if m == 1 { v / keep } else { 0.0 })
                .collect(),
            None => x.clone(),
        };
        let probs: Vec<f64> = logits(params, &effective).into_iter().map(sigmoid).collect();
        let targets = smooth_targets(y, config.smoothing_alpha);
        total_loss += bce_loss(&probs, &targets)?;
        for l in 0..labels {
            let dz = (probs[l] - targets[l]) / labels as f64;
            grads.bias[l] += dz;
            let row = &mut grads.weights[l];
            for (g, v) in row.iter_mut().zip(effective.iter()) {
                *g += dz * v;
            }
        }
    }

    for row in &mut grads.weights {
        for g in row {
            *g /= batch;
        }
    }
    for g in &mut grads.bias {
        *g /= batch;
    }
    Ok((total_loss / batch, grads))
}

/// Rescale all gradients so the global L2 norm does not exceed `max_norm`
/// (up to a 1e-9 relative slack). Gradients already within the cap pass
/// through bit-unchanged; the slack absorbs rescaling rounding so clipping
/// is exactly idempotent.
pub fn clip_global_norm(mut grads: HeadGrads, max_norm: f64) -> HeadGrads {
    let norm = grads.global_norm();
    if norm > max_norm * (1.0 + 1e-9) {
        let divisor = norm / max_norm;
        for row in &mut grads.weights {
            for g in row {
                *g /= divisor;
            }
        }
        for g in &mut grads.bias {
            *g /= divisor;
        }
    }
    grads
}

/// One AdamW update with bias correction and decoupled weight decay:
/// the decay term `lr * weight_decay * theta` never touches the moments.
pub fn adamw_step(
    params: &mut HeadParams,
    state: &mut AdamWState,
    grads: &HeadGrads,
    config: &TrainConfig,
) {
    state.t += 1;
    let t = state.t as i32;
    let correction1 = 1.0 - config.beta1.powi(t);
    let correction2 = 1.0 - config.beta2.powi(t);

    let update = |theta: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
        *m = config.beta1 * *m + (1.0 - config.beta1) * g;
        *v = config.beta2 * *v + (1.0 - config.beta2) * g * g;
        let m_hat = *m / correction1;
        let v_hat = *v / correction2;
        *theta -= config.learning_rate
            * (m_hat / (v_hat.sqrt() + config.epsilon) + config.weight_decay * *theta);
    };

    for ((p_row, m_row), (v_row, g_row)) in params
        .weights
        .iter_mut()
        .zip(state.m.weights.iter_mut())
        .zip(state.v.weights.iter_mut().zip(grads.weights.iter()))
    {
        for ((p, m), (v, g)) in p_row
            .iter_mut()
            .zip(m_row.iter_mut())
            .zip(v_row.iter_mut().zip(g_row.iter()))
        {
            update(p, m, v, *g);
        }
    }
    for ((p, m), (v, g)) in params
        .bias
        .iter_mut()
        .zip(state.m.bias.iter_mut())
        .zip(state.v.bias.iter_mut().zip(grads.bias.iter()))
    {
        update(p, m, v, *g);
    }
}

/// Probabilities and thresholded decisions; `p >= threshold` counts positive,
/// so a probability of exactly 0.5 crosses the default threshold.
pub fn predict(
    model: &TrainedModel,
    x: &[f64],
    threshold: f64,
) -> Result<(Vec<f64>, Vec<u8>), HeadError> {
    let probs = forward(&model.params, x, ForwardMode::Eval)?;
    let decisions = probs.iter().map(|&p| u8::from(p >= threshold)).collect();
    Ok((probs, decisions))
}
