//! Classical multi-output baselines over normalized embeddings.
//!
//! Pipeline order is fixed everywhere: L2-normalize each embedding, then
//! z-score with statistics fitted on the training set only, then one
//! independent binary learner per emotion label. Labels that show a single
//! class at fit time get a constant learner for that class.

mod checkpoint;

pub use checkpoint::{load_baseline, save_baseline};

use std::collections::BTreeMap;
use std::f64::consts::PI;

use thiserror::Error;

use crate::datasets::LabelSchema;
use crate::embeddings::{
    fit_scaler, l2_normalize, transform_one, EmbeddingError, EmbeddingVector, ScalerParams,
    TextEmbedder,
};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("training set is empty")]
    EmptyTraining,
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("embedder fingerprint {got:?} does not match the model's {expected:?}")]
    FingerprintMismatch { expected: String, got: String },
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Hyperparameters for the gradient-descent logistic regression.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRegHyper {
    pub l2_penalty: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// Initial gradient-descent step; backtracking halves it as needed.
    pub step: f64,
}

impl Default for LogRegHyper {
    fn default() -> Self {
        Self {
            l2_penalty: 1e-4,
            max_iter: 1000,
            tol: 1e-8,
            step: 0.1,
        }
    }
}

/// Fitted logistic-regression parameters plus the hyperparameters used.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRegParams {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2_penalty: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl LogRegParams {
    pub fn probability(&self, x: &[f64]) -> Result<f64, BaselineError> {
        if x.len() != self.weights.len() {
            return Err(BaselineError::DimMismatch {
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        let z: f64 = self
            .weights
            .iter()
            .zip(x.iter())
            .map(|(w, v)| w * v)
            .sum::<f64>()
            + self.bias;
        Ok(sigmoid(z))
    }
}

/// L2-penalized objective: mean Bernoulli negative log-likelihood plus
/// `penalty/2 * ||w||^2` (bias unpenalized).
fn logreg_objective(weights: &[f64], bias: f64, xs: &[&[f64]], ys: &[u8], penalty: f64) -> f64 {
    let n = xs.len() as f64;
    let mut nll = 0.0;
    for (x, &y) in xs.iter().zip(ys.iter()) {
        let z: f64 = weights.iter().zip(x.iter()).map(|(w, v)| w * v).sum::<f64>() + bias;
        // -ln sigma(z) = softplus(-z); -ln(1 - sigma(z)) = softplus(z).
        nll += if y == 1 { softplus(-z) } else { softplus(z) };
    }
    nll / n + penalty / 2.0 * weights.iter().map(|w| w * w).sum::<f64>()
}

/// Fit by full-batch gradient descent with backtracking halving, stopping
/// when the gradient norm drops below `tol` or `max_iter` is reached.
pub fn fit_logreg(
    xs: &[EmbeddingVector],
    ys: &[u8],
    hyper: &LogRegHyper,
) -> Result<LogRegParams, BaselineError> {
    fit_logreg_traced(xs, ys, hyper, None)
}

fn fit_logreg_traced(
    xs: &[EmbeddingVector],
    ys: &[u8],
    hyper: &LogRegHyper,
    mut objective_trace: Option<&mut Vec<f64>>,
) -> Result<LogRegParams, BaselineError> {
    if xs.is_empty() {
        return Err(BaselineError::EmptyTraining);
    }
    if xs.len() != ys.len() {
        return Err(BaselineError::DimMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    let dim = xs[0].dim();
    for x in xs {
        if x.dim() != dim {
            return Err(BaselineError::DimMismatch {
                expected: dim,
                got: x.dim(),
            });
        }
    }
    let rows: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
    let n = rows.len() as f64;

    let mut weights = vec![0.0f64; dim];
    let mut bias = 0.0f64;
    let mut objective = logreg_objective(&weights, bias, &rows, ys, hyper.l2_penalty);
    if let Some(trace) = objective_trace.as_deref_mut() {
        trace.push(objective);
    }

    for _ in 0..hyper.max_iter {
        let mut grad_w = vec![0.0f64; dim];
        let mut grad_b = 0.0f64;
        for (x, &y) in rows.iter().zip(ys.iter()) {
            let z: f64 = weights.iter().zip(x.iter()).map(|(w, v)| w * v).sum::<f64>() + bias;
            let residual = sigmoid(z) - y as f64;
            grad_b += residual;
            for (g, v) in grad_w.iter_mut().zip(x.iter()) {
                *g += residual * v;
            }
        }
        grad_b /= n;
        for (g, w) in grad_w.iter_mut().zip(weights.iter()) {
            *g = *g / n + hyper.l2_penalty * w;
        }
        let grad_norm =
            (grad_w.iter().map(|g| g * g).sum::<f64>() + grad_b * grad_b).sqrt();
        if grad_norm < hyper.tol {
            break;
        }

        let mut step = hyper.step;
        loop {
            let candidate_w: Vec<f64> = weights
                .iter()
                .zip(grad_w.iter())
                .map(|(w, g)| w - step * g)
                .collect();
            let candidate_b = bias - step * grad_b;
            let candidate_obj =
                logreg_objective(&candidate_w, candidate_b, &rows, ys, hyper.l2_penalty);
            if candidate_obj <= objective {
                weights = candidate_w;
                bias = candidate_b;
                objective = candidate_obj;
                if let Some(trace) = objective_trace.as_deref_mut() {
                    trace.push(objective);
                }
                break;
            }
            step /= 2.0;
            if step < 1e-16 {
                // No descent direction at representable step size: converged.
                return Ok(LogRegParams {
                    weights,
                    bias,
                    l2_penalty: hyper.l2_penalty,
                    max_iter: hyper.max_iter,
                    tol: hyper.tol,
                });
            }
        }
    }

    Ok(LogRegParams {
        weights,
        bias,
        l2_penalty: hyper.l2_penalty,
        max_iter: hyper.max_iter,
        tol: hyper.tol,
    })
}

/// Gaussian naive Bayes with per-class diagonal covariance in log space.
#[derive(Debug, Clone, PartialEq)]
pub struct GnbParams {
    /// Log prior per class, index 0 then 1.
    pub log_prior: [f64; 2],
    pub mean: [Vec<f64>; 2],
    /// Population variance per dimension, floored by the smoothing term.
    pub var: [Vec<f64>; 2],
}

impl GnbParams {
    pub fn dim(&self) -> usize {
        self.mean[0].len()
    }

    /// Unnormalized log posterior of class `c`.
    pub fn log_posterior(&self, class: usize, x: &[f64]) -> Result<f64, BaselineError> {
        if x.len() != self.dim() {
            return Err(BaselineError::DimMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut score = self.log_prior[class];
        for ((v, m), var) in x.iter().zip(self.mean[class].iter()).zip(self.var[class].iter()) {
            let d = v - m;
            score += -0.5 * (2.0 * PI * var).ln() - d * d / (2.0 * var);
        }
        Ok(score)
    }
}

/// Fit per-class means, smoothed population variances, and priors.
/// Both classes must be present.
pub fn fit_gnb(xs: &[EmbeddingVector], ys: &[u8]) -> Result<GnbParams, BaselineError> {
    if xs.is_empty() {
        return Err(BaselineError::EmptyTraining);
    }
    if xs.len() != ys.len() {
        return Err(BaselineError::DimMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    let dim = xs[0].dim();
    for x in xs {
        if x.dim() != dim {
            return Err(BaselineError::DimMismatch {
                expected: dim,
                got: x.dim(),
            });
        }
    }
    let count1 = ys.iter().filter(|&&y| y == 1).count();
    let count0 = ys.len() - count1;
    if count0 == 0 || count1 == 0 {
        return Err(BaselineError::SingleClass);
    }

    let mut mean = [vec![0.0; dim], vec![0.0; dim]];
    for (x, &y) in xs.iter().zip(ys.iter()) {
        let m = &mut mean[y as usize];
        for (acc, v) in m.iter_mut().zip(x.iter()) {
            *acc += v;
        }
    }
    for (class, count) in [(0usize, count0), (1usize, count1)] {
        for acc in &mut mean[class] {
            *acc /= count as f64;
        }
    }

    let mut var = [vec![0.0; dim], vec![0.0; dim]];
    for (x, &y) in xs.iter().zip(ys.iter()) {
        let class = y as usize;
        for ((acc, v), m) in var[class].iter_mut().zip(x.iter()).zip(mean[class].iter()) {
            let d = v - m;
            *acc += d * d;
        }
    }
    for (class, count) in [(0usize, count0), (1usize, count1)] {
        for acc in &mut var[class] {
            *acc /= count as f64;
        }
    }

    // Smoothing floor: 1e-9 of the largest overall per-dimension variance,
    // with an absolute fallback when every dimension is constant.
    let n = xs.len() as f64;
    let mut overall_mean = vec![0.0; dim];
    for x in xs {
        for (acc, v) in overall_mean.iter_mut().zip(x.iter()) {
            *acc += v;
        }
    }
    for acc in &mut overall_mean {
        *acc /= n;
    }
    let mut max_overall_var = 0.0f64;
    for d in 0..dim {
        let v = xs
            .iter()
            .map(|x| {
                let diff = x[d] - overall_mean[d];
                diff * diff
            })
            .sum::<f64>()
            / n;
        max_overall_var = max_overall_var.max(v);
    }
    let mut floor = 1e-9 * max_overall_var;
    if floor == 0.0 {
        floor = 1e-9;
    }
    for class_var in &mut var {
        for v in class_var.iter_mut() {
            *v += floor;
        }
    }

    Ok(GnbParams {
        log_prior: [
            (count0 as f64 / n).ln(),
            (count1 as f64 / n).ln(),
        ],
        mean,
        var,
    })
}

/// Which classical learner a multi-output model wraps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerKind {
    LogReg,
    Gnb,
}

impl LearnerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::LogReg => "logreg",
            LearnerKind::Gnb => "gnb",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logreg" => Some(LearnerKind::LogReg),
            "gnb" => Some(LearnerKind::Gnb),
            _ => None,
        }
    }
}

/// A fitted per-label learner.
#[derive(Debug, Clone, PartialEq)]
pub enum BinaryLearner {
    LogReg(LogRegParams),
    Gnb(GnbParams),
    /// Training saw only this class for the label.
    Constant(u8),
}

/// Predict one label. Logistic regression thresholds at p >= 0.5; GNB
/// compares log posteriors with ties going to class 0. The score is the
/// probability of class 1.
pub fn predict_binary(learner: &BinaryLearner, x: &[f64]) -> Result<(u8, f64), BaselineError> {
    match learner {
        BinaryLearner::LogReg(params) => {
            let p = params.probability(x)?;
            Ok((u8::from(p >= 0.5), p))
        }
        BinaryLearner::Gnb(params) => {
            let lp0 = params.log_posterior(0, x)?;
            let lp1 = params.log_posterior(1, x)?;
            let p1 = sigmoid(lp1 - lp0);
            Ok((u8::from(lp1 > lp0), p1))
        }
        BinaryLearner::Constant(class) => Ok((*class, *class as f64)),
    }
}

/// One binary learner per schema label over the shared normalization pipeline.
#[derive(Debug, Clone)]
pub struct MultiOutputModel {
    pub schema: LabelSchema,
    pub kind: LearnerKind,
    pub scaler: ScalerParams,
    pub learners: Vec<BinaryLearner>,
    pub embedder_fingerprint: String,
}

/// Fit the full pipeline: L2-normalize raw embeddings, fit the scaler on
/// them, transform, then fit one learner per label column.
pub fn fit_multioutput(
    kind: LearnerKind,
    raw_embeddings: &[EmbeddingVector],
    labels: &[Vec<u8>],
    schema: &LabelSchema,
    embedder_fingerprint: &str,
    hyper: &LogRegHyper,
) -> Result<MultiOutputModel, BaselineError> {
    if raw_embeddings.is_empty() {
        return Err(BaselineError::EmptyTraining);
    }
    if raw_embeddings.len() != labels.len() {
        return Err(BaselineError::DimMismatch {
            expected: raw_embeddings.len(),
            got: labels.len(),
        });
    }
    for row in labels {
        if row.len() != schema.len() {
            return Err(BaselineError::DimMismatch {
                expected: schema.len(),
                got: row.len(),
            });
        }
    }

    let normalized: Vec<EmbeddingVector> = raw_embeddings
        .iter()
        .map(l2_normalize)
        .collect::<Result<_, _>>()?;
    let scaler = fit_scaler(&normalized)?;
    let transformed: Vec<EmbeddingVector> = normalized
        .iter()
        .map(|row| transform_one(&scaler, row))
        .collect::<Result<_, _>>()?;

    let mut learners = Vec::with_capacity(schema.len());
    for label_index in 0..schema.len() {
        let column: Vec<u8> = labels.iter().map(|row| row[label_index]).collect();
        let positives = column.iter().filter(|&&y| y == 1).count();
        let learner = if positives == 0 {
            BinaryLearner::Constant(0)
        } else if positives == column.len() {
            BinaryLearner::Constant(1)
        } else {
            match kind {
                LearnerKind::LogReg => {
                    BinaryLearner::LogReg(fit_logreg(&transformed, &column, hyper)?)
                }
                LearnerKind::Gnb => BinaryLearner::Gnb(fit_gnb(&transformed, &column)?),
            }
        };
        learners.push(learner);
    }

    Ok(MultiOutputModel {
        schema: schema.clone(),
        kind,
        scaler,
        learners,
        embedder_fingerprint: embedder_fingerprint.to_string(),
    })
}

impl MultiOutputModel {
    /// Apply the train-time transforms to one raw embedding.
    pub fn transform(&self, raw: &EmbeddingVector) -> Result<EmbeddingVector, BaselineError> {
        let normalized = l2_normalize(raw)?;
        Ok(transform_one(&self.scaler, &normalized)?)
    }

    /// Predict all labels for one already-transformed row.
    pub fn predict_row(&self, transformed: &[f64]) -> Result<Vec<u8>, BaselineError> {
        self.learners
            .iter()
            .map(|learner| predict_binary(learner, transformed).map(|(label, _)| label))
            .collect()
    }

    /// Predict all labels for one raw embedding.
    pub fn predict_raw(&self, raw: &EmbeddingVector) -> Result<Vec<u8>, BaselineError> {
        let transformed = self.transform(raw)?;
        self.predict_row(&transformed)
    }
}

/// Embed a text, run the train-time transforms, and predict every label,
/// returning an emotion-name-to-decision dictionary.
pub fn predict_dict(
    model: &MultiOutputModel,
    text: &str,
    embedder: &dyn TextEmbedder,
) -> Result<BTreeMap<String, u8>, BaselineError> {
    if text.trim().is_empty() {
        return Err(BaselineError::Embedding(EmbeddingError::EmptyText));
    }
    let got = embedder.fingerprint();
    if got != model.embedder_fingerprint {
        return Err(BaselineError::FingerprintMismatch {
            expected: model.embedder_fingerprint.clone(),
            got,
        });
    }
    let raw = embedder.embed(text)?;
    let decisions = model.predict_raw(&raw)?;
    Ok(model
        .schema
        .label_names()
        .into_iter()
        .zip(decisions)
        .collect())
}
