//! Mini-batch training with early stopping on the dev macro F1.
//!
//! Per epoch: seeded shuffle, batches of `batch_size` (the final partial
//! batch is kept), and per batch fresh dropout masks, analytic gradients,
//! global-norm clipping, one AdamW step. Training halts when the dev score
//! has not strictly improved for `patience` consecutive epochs or the epoch
//! cap is reached, and the best epoch's parameters are restored.

use crate::datasets::{sample_key, Dataset, LabelSchema};
use crate::embeddings::{EmbeddingStore, EmbeddingVector, TextEmbedder};
use crate::metrics;
use crate::rng::SplitMix64;

use super::{
    adamw_step, clip_global_norm, loss_and_grads, predict, AdamWState, EpochRecord, HeadError,
    HeadParams, TrainConfig, TrainedModel,
};

/// A dataset joined with its embeddings: one feature vector per sample.
#[derive(Debug, Clone)]
pub struct EmbeddedSplit {
    pub schema: LabelSchema,
    pub xs: Vec<EmbeddingVector>,
    pub ys: Vec<Vec<u8>>,
}

impl EmbeddedSplit {
    pub fn new(
        schema: LabelSchema,
        xs: Vec<EmbeddingVector>,
        ys: Vec<Vec<u8>>,
    ) -> Result<Self, HeadError> {
        if xs.len() != ys.len() {
            return Err(HeadError::DimMismatch {
                expected: xs.len(),
                got: ys.len(),
            });
        }
        if let Some(first) = xs.first() {
            for x in &xs {
                if x.dim() != first.dim() {
                    return Err(HeadError::DimMismatch {
                        expected: first.dim(),
                        got: x.dim(),
                    });
                }
            }
        }
        for y in &ys {
            if y.len() != schema.len() {
                return Err(HeadError::DimMismatch {
                    expected: schema.len(),
                    got: y.len(),
                });
            }
        }
        Ok(Self { schema, xs, ys })
    }

    /// Join a dataset with a precomputed store via `<split>:<row>` keys.
    pub fn from_store(dataset: &Dataset, store: &EmbeddingStore) -> Result<Self, HeadError> {
        let mut xs = Vec::with_capacity(dataset.len());
        for index in 0..dataset.len() {
            let key = sample_key(dataset.split, index);
            let vector = store
                .get(&key)
                .ok_or_else(|| HeadError::MissingEmbedding(key.clone()))?;
            xs.push(vector.clone());
        }
        Self::new(dataset.schema.clone(), xs, dataset.labels_matrix())
    }

    /// Embed every text directly with the given backend.
    pub fn from_embedder(
        dataset: &Dataset,
        embedder: &dyn TextEmbedder,
    ) -> Result<Self, HeadError> {
        let mut xs = Vec::with_capacity(dataset.len());
        for sample in &dataset.samples {
            xs.push(embedder.embed(&sample.text)?);
        }
        Self::new(dataset.schema.clone(), xs, dataset.labels_matrix())
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.xs.first().map_or(0, EmbeddingVector::dim)
    }
}

/// Train with the standard dev-set evaluator: macro F1 of thresholded
/// predictions against the dev labels.
pub fn train_head(
    train: &EmbeddedSplit,
    dev: &EmbeddedSplit,
    config: &TrainConfig,
    embedder_fingerprint: &str,
) -> Result<TrainedModel, HeadError> {
    if train.is_empty() {
        return Err(HeadError::EmptySplit("train"));
    }
    if dev.is_empty() {
        return Err(HeadError::EmptySplit("dev"));
    }
    if dev.dim() != train.dim() {
        return Err(HeadError::DimMismatch {
            expected: train.dim(),
            got: dev.dim(),
        });
    }
    let threshold = config.threshold;
    let golds = dev.ys.clone();
    train_head_with_eval(train, config, embedder_fingerprint, |params, _epoch| {
        let preds: Vec<Vec<u8>> = dev
            .xs
            .iter()
            .map(|x| {
                let probs = super::forward(params, x, super::ForwardMode::Eval)
                    .expect("dev dims validated");
                probs.iter().map(|&p| u8::from(p >= threshold)).collect()
            })
            .collect();
        let counts = metrics::confusion(&preds, &golds).expect("shapes validated");
        metrics::macro_f1(&counts)
    })
}

/// Training loop with a pluggable per-epoch dev evaluator. The evaluator sees
/// the current parameters and the 1-based epoch number and returns the score
/// that early stopping monitors.
pub fn train_head_with_eval<F>(
    train: &EmbeddedSplit,
    config: &TrainConfig,
    embedder_fingerprint: &str,
    mut dev_eval: F,
) -> Result<TrainedModel, HeadError>
where
    F: FnMut(&HeadParams, usize) -> f64,
{
    config.validate()?;
    if train.is_empty() {
        return Err(HeadError::EmptySplit("train"));
    }
    let dim = train.dim();
    let labels = train.schema.len();
    let n = train.len();

    let mut rng = SplitMix64::new(config.seed);
    let mut params = HeadParams::init(labels, dim, &mut rng);
    let mut state = AdamWState::zeros(labels, dim);

    let mut history: Vec<EpochRecord> = Vec::new();
    let mut best_params = params.clone();
    let mut best_f1 = f64::NEG_INFINITY;
    let mut best_epoch = 0usize;
    let mut stale_epochs = 0usize;

    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 1..=config.max_epochs {
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let xs: Vec<Vec<f64>> = batch.iter().map(|&i| train.xs[i].as_slice().to_vec()).collect();
            let ys: Vec<Vec<u8>> = batch.iter().map(|&i| train.ys[i].clone()).collect();
            let masks: Option<Vec<Vec<u8>>> = if config.dropout_rate > 0.0 {
                Some(
                    batch
                        .iter()
                        .map(|_| {
                            (0..dim)
                                .map(|_| u8::from(rng.bernoulli(1.0 - config.dropout_rate)))
                                .collect()
                        })
                        .collect(),
                )
            } else {
                None
            };
            let (loss, grads) = loss_and_grads(&params, &xs, &ys, config, masks.as_deref())?;
            let grads = clip_global_norm(grads, config.clip_max_norm);
            adamw_step(&mut params, &mut state, &grads, config);
            loss_sum += loss * batch.len() as f64;
        }
        let train_loss = loss_sum / n as f64;
        let dev_macro_f1 = dev_eval(&params, epoch);
        history.push(EpochRecord {
            epoch,
            train_loss,
            dev_macro_f1,
        });
        if dev_macro_f1 > best_f1 {
            best_f1 = dev_macro_f1;
            best_params = params.clone();
            best_epoch = epoch;
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= config.patience {
                break;
            }
        }
    }

    Ok(TrainedModel {
        params: best_params,
        schema: train.schema.clone(),
        embedder_fingerprint: embedder_fingerprint.to_string(),
        threshold: config.threshold,
        config: config.clone(),
        history,
        best_epoch,
    })
}

/// Evaluate a trained model on an embedded split at its own threshold.
pub fn predictions_for_split(
    model: &TrainedModel,
    split: &EmbeddedSplit,
    threshold: f64,
) -> Result<Vec<Vec<u8>>, HeadError> {
    split
        .xs
        .iter()
        .map(|x| predict(model, x, threshold).map(|(_, decisions)| decisions))
        .collect()
}
