//! Text-to-vector backends and the embedding normalization pipeline.
//!
//! Three backends produce fixed-dimension vectors: a deterministic signed
//! feature-hashing stand-in, a precomputed on-disk store, and a remote HTTP
//! encoder service. Downstream consumers normalize with L2 first, then
//! z-score against statistics fitted on the training split.

mod hashing;
mod remote;
mod store;

pub use hashing::{embed_hashing, HashingEmbedder};
pub use remote::{embed_remote, RemoteEmbedder};
pub use store::{load_store, save_store, EmbeddingStore};

use std::ops::Deref;

use thiserror::Error;

/// Which backend produces vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Hashing,
    Precomputed,
    Remote,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Hashing => "hashing",
            Backend::Precomputed => "precomputed",
            Backend::Remote => "remote",
        }
    }
}

pub const DEFAULT_HASHING_DIM: usize = 256;
pub const DEFAULT_ENCODER_DIM: usize = 1024;
pub const DEFAULT_MAX_TOKENS: usize = 150;

/// Backend selection plus the knobs shared by all of them.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedderConfig {
    pub backend: Backend,
    pub dim: usize,
    /// Token budget; texts are truncated to this many tokens before encoding.
    pub max_tokens: usize,
    /// Base URL of the encoder service (remote backend only).
    pub endpoint: Option<String>,
    /// Hash seed (hashing backend only).
    pub seed: u64,
}

impl EmbedderConfig {
    pub fn hashing(dim: usize, seed: u64) -> Result<Self, EmbeddingError> {
        Self::validate(Self {
            backend: Backend::Hashing,
            dim,
            max_tokens: DEFAULT_MAX_TOKENS,
            endpoint: None,
            seed,
        })
    }

    pub fn remote(endpoint: impl Into<String>, dim: usize) -> Result<Self, EmbeddingError> {
        Self::validate(Self {
            backend: Backend::Remote,
            dim,
            max_tokens: DEFAULT_MAX_TOKENS,
            endpoint: Some(endpoint.into()),
            seed: 0,
        })
    }

    pub fn precomputed(dim: usize) -> Result<Self, EmbeddingError> {
        Self::validate(Self {
            backend: Backend::Precomputed,
            dim,
            max_tokens: DEFAULT_MAX_TOKENS,
            endpoint: None,
            seed: 0,
        })
    }

    pub fn with_max_tokens(mut self, max_tokens: usize) -> Result<Self, EmbeddingError> {
        self.max_tokens = max_tokens;
        Self::validate(self)
    }

    fn validate(config: Self) -> Result<Self, EmbeddingError> {
        if config.dim < 2 {
            return Err(EmbeddingError::Config(format!(
                "dim must be at least 2, got {}",
                config.dim
            )));
        }
        if config.max_tokens < 1 {
            return Err(EmbeddingError::Config("max_tokens must be at least 1".into()));
        }
        Ok(config)
    }

    /// Identity string stored in model checkpoints so prediction can verify
    /// it is fed vectors from the same source as training.
    pub fn fingerprint(&self) -> String {
        match self.backend {
            Backend::Hashing => format!(
                "hashing:dim={}:max_tokens={}:seed={}",
                self.dim, self.max_tokens, self.seed
            ),
            Backend::Remote => format!("remote:dim={}:max_tokens={}", self.dim, self.max_tokens),
            Backend::Precomputed => format!("precomputed:dim={}", self.dim),
        }
    }

    /// Rebuild a config from a checkpoint fingerprint. Remote endpoints are
    /// deliberately not part of the fingerprint; callers supply them again.
    pub fn from_fingerprint(fingerprint: &str) -> Result<Self, EmbeddingError> {
        let mut parts = fingerprint.split(':');
        let backend = parts.next().unwrap_or("");
        let mut dim = None;
        let mut max_tokens = DEFAULT_MAX_TOKENS;
        let mut seed = 0u64;
        for part in parts {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| EmbeddingError::Config(format!("bad fingerprint field {part:?}")))?;
            let parse = |v: &str| {
                v.parse::<u64>()
                    .map_err(|_| EmbeddingError::Config(format!("bad fingerprint value {v:?}")))
            };
            match key {
                "dim" => dim = Some(parse(value)? as usize),
                "max_tokens" => max_tokens = parse(value)? as usize,
                "seed" => seed = parse(value)?,
                _ => return Err(EmbeddingError::Config(format!("bad fingerprint key {key:?}"))),
            }
        }
        let dim =
            dim.ok_or_else(|| EmbeddingError::Config("fingerprint missing dim".into()))?;
        let config = match backend {
            "hashing" => EmbedderConfig {
                backend: Backend::Hashing,
                dim,
                max_tokens,
                endpoint: None,
                seed,
            },
            "remote" => EmbedderConfig {
                backend: Backend::Remote,
                dim,
                max_tokens,
                endpoint: None,
                seed: 0,
            },
            "precomputed" => EmbedderConfig {
                backend: Backend::Precomputed,
                dim,
                max_tokens,
                endpoint: None,
                seed: 0,
            },
            other => {
                return Err(EmbeddingError::Config(format!(
                    "unknown backend in fingerprint: {other:?}"
                )))
            }
        };
        Self::validate(config)
    }
}

/// A fixed-dimension real vector. Entries are finite by construction at every
/// boundary that builds one (hashing, store parsing, remote responses).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(pub Vec<f64>);

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for EmbeddingVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for EmbeddingVector {
    fn from(values: Vec<f64>) -> Self {
        EmbeddingVector(values)
    }
}

/// Per-dimension mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalerParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ScalerParams {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("text is empty")]
    EmptyText,
    #[error("cannot normalize a zero vector")]
    ZeroVector,
    #[error("need at least 2 rows to fit a scaler, got {found}")]
    TooFewRows { found: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("duplicate key {0:?}")]
    DuplicateKey(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad embeddings file: {0}")]
    Format(String),
    #[error("embedder config: {0}")]
    Config(String),
    #[error("remote backend requires an endpoint")]
    MissingEndpoint,
    #[error("network: {0}")]
    Network(String),
    #[error("remote error (status {status}): {message}")]
    Remote { status: u16, message: String },
}

/// A text-to-vector function with a stable identity.
pub trait TextEmbedder {
    fn dim(&self) -> usize;
    fn fingerprint(&self) -> String;
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError>;

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

/// Scale a vector to unit L2 norm, preserving direction.
pub fn l2_normalize(v: &EmbeddingVector) -> Result<EmbeddingVector, EmbeddingError> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(EmbeddingError::ZeroVector);
    }
    Ok(EmbeddingVector(v.iter().map(|x| x / norm).collect()))
}

/// Fit per-dimension mean and population standard deviation (divide by N).
pub fn fit_scaler(rows: &[EmbeddingVector]) -> Result<ScalerParams, EmbeddingError> {
    if rows.len() < 2 {
        return Err(EmbeddingError::TooFewRows { found: rows.len() });
    }
    let dim = rows[0].dim();
    for row in rows {
        if row.dim() != dim {
            return Err(EmbeddingError::DimMismatch {
                expected: dim,
                got: row.dim(),
            });
        }
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0; dim];
    for row in rows {
        for (m, x) in mean.iter_mut().zip(row.iter()) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; dim];
    for row in rows {
        for ((v, x), m) in var.iter_mut().zip(row.iter()).zip(mean.iter()) {
            let d = x - m;
            *v += d * d;
        }
    }
    let std = var.iter().map(|v| (v / n).sqrt()).collect();
    Ok(ScalerParams { mean, std })
}

/// Center and scale rows; dimensions with zero standard deviation map to
/// exactly 0 rather than dividing by an epsilon.
pub fn transform_scaler(
    params: &ScalerParams,
    rows: &[EmbeddingVector],
) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
    rows.iter().map(|row| transform_one(params, row)).collect()
}

pub fn transform_one(
    params: &ScalerParams,
    row: &EmbeddingVector,
) -> Result<EmbeddingVector, EmbeddingError> {
    if row.dim() != params.dim() {
        return Err(EmbeddingError::DimMismatch {
            expected: params.dim(),
            got: row.dim(),
        });
    }
    let values = row
        .iter()
        .zip(params.mean.iter().zip(params.std.iter()))
        .map(|(x, (m, s))| if *s > 0.0 { (x - m) / s } else { 0.0 })
        .collect();
    Ok(EmbeddingVector(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    #[test]
    fn l2_normalize_three_four_five() {
        let v = EmbeddingVector(vec![3.0, 4.0]);
        let out = l2_normalize(&v).unwrap();
        assert_eq!(out.as_slice(), &[0.6, 0.8]);
    }

    #[test]
    fn l2_normalize_unit_vector_unchanged() {
        let v = l2_normalize(&EmbeddingVector(vec![1.0, 2.0, -3.0])).unwrap();
        let again = l2_normalize(&v).unwrap();
        for (a, b) in v.iter().zip(again.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn l2_normalize_zero_vector_errors() {
        assert!(matches!(
            l2_normalize(&EmbeddingVector(vec![0.0, 0.0])),
            Err(EmbeddingError::ZeroVector)
        ));
    }

    #[test]
    fn fit_scaler_two_point_column() {
        let rows = vec![EmbeddingVector(vec![1.0]), EmbeddingVector(vec![3.0])];
        let params = fit_scaler(&rows).unwrap();
        assert_eq!(params.mean, vec![2.0]);
        assert_eq!(params.std, vec![1.0]);
    }

    #[test]
    fn fit_scaler_constant_column() {
        let rows = vec![
            EmbeddingVector(vec![5.0]),
            EmbeddingVector(vec![5.0]),
            EmbeddingVector(vec![5.0]),
        ];
        let params = fit_scaler(&rows).unwrap();
        assert_eq!(params.mean, vec![5.0]);
        assert_eq!(params.std, vec![0.0]);
        let out = transform_scaler(&params, &rows).unwrap();
        for row in out {
            assert_eq!(row.as_slice(), &[0.0]);
        }
    }

    #[test]
    fn fit_scaler_needs_two_rows() {
        assert!(matches!(
            fit_scaler(&[EmbeddingVector(vec![1.0])]),
            Err(EmbeddingError::TooFewRows { found: 1 })
        ));
    }

    #[test]
    fn transform_simple_column() {
        let params = ScalerParams {
            mean: vec![2.0],
            std: vec![1.0],
        };
        let rows = vec![EmbeddingVector(vec![1.0]), EmbeddingVector(vec![3.0])];
        let out = transform_scaler(&params, &rows).unwrap();
        assert_eq!(out[0].as_slice(), &[-1.0]);
        assert_eq!(out[1].as_slice(), &[1.0]);
    }

    #[test]
    fn fit_then_transform_standardizes() {
        let mut rng = SplitMix64::new(11);
        let rows: Vec<EmbeddingVector> = (0..100)
            .map(|_| EmbeddingVector((0..8).map(|_| rng.uniform(-3.0, 5.0)).collect()))
            .collect();
        let params = fit_scaler(&rows).unwrap();
        let out = transform_scaler(&params, &rows).unwrap();
        let refit = fit_scaler(&out).unwrap();
        for d in 0..8 {
            assert!(refit.mean[d].abs() < 1e-9, "mean[{d}] = {}", refit.mean[d]);
            assert!(
                (refit.std[d] - 1.0).abs() < 1e-9,
                "std[{d}] = {}",
                refit.std[d]
            );
        }
    }

    #[test]
    fn fingerprint_roundtrip() {
        let config = EmbedderConfig::hashing(64, 9).unwrap();
        let parsed = EmbedderConfig::from_fingerprint(&config.fingerprint()).unwrap();
        assert_eq!(parsed, config);

        let remote = EmbedderConfig::remote("http://localhost:1", 1024).unwrap();
        let parsed = EmbedderConfig::from_fingerprint(&remote.fingerprint()).unwrap();
        assert_eq!(parsed.backend, Backend::Remote);
        assert_eq!(parsed.dim, 1024);
        assert_eq!(parsed.endpoint, None);
    }

    #[test]
    fn config_rejects_degenerate_dims() {
        assert!(EmbedderConfig::hashing(1, 0).is_err());
        assert!(EmbedderConfig::hashing(2, 0).is_ok());
        assert!(EmbedderConfig::hashing(2, 0)
            .unwrap()
            .with_max_tokens(0)
            .is_err());
    }

    proptest! {
        #[test]
        fn l2_normalize_is_idempotent(values in proptest::collection::vec(-1e3f64..1e3, 1..32)) {
            prop_assume!(values.iter().any(|v| *v != 0.0));
            let once = l2_normalize(&EmbeddingVector(values)).unwrap();
            let twice = l2_normalize(&once).unwrap();
            for (a, b) in once.iter().zip(twice.iter()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            let norm: f64 = once.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-9);
        }

        #[test]
        fn transform_preserves_shape_and_zeroes_constant_dims(
            seed in 0u64..1000,
            n in 2usize..20,
            dim in 1usize..8,
        ) {
            let mut rng = SplitMix64::new(seed);
            let mut rows: Vec<EmbeddingVector> = (0..n)
                .map(|_| EmbeddingVector((0..dim).map(|_| rng.uniform(-2.0, 2.0)).collect()))
                .collect();
            // Make dimension 0 constant.
            for row in &mut rows {
                row.0[0] = 7.5;
            }
            let params = fit_scaler(&rows).unwrap();
            let out = transform_scaler(&params, &rows).unwrap();
            prop_assert_eq!(out.len(), n);
            for row in &out {
                prop_assert_eq!(row.dim(), dim);
                prop_assert_eq!(row[0], 0.0);
            }
        }
    }
}
