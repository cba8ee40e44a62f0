//! Multi-label emotion classification over multilingual sentence embeddings.
//!
//! The crate covers the full post-encoder pipeline:
//!
//! - [`datasets`]: label schemas and CSV corpus ingestion with split stats.
//! - [`embeddings`]: hashing/precomputed/remote vector backends plus the
//!   L2-then-z-score normalization pipeline.
//! - [`head`]: the trainable sigmoid-output linear head with smoothed BCE,
//!   AdamW, gradient clipping, and early stopping on dev macro F1.
//! - [`baselines`]: per-label logistic regression and Gaussian naive Bayes
//!   wrapped as one multi-output model.
//! - [`metrics`]: per-label precision/recall/F1, micro/macro aggregation,
//!   report tables, multi-seed statistics, and leaderboard gaps.
//! - [`cli`]: the `emoclass` command-line surface over all of the above.
//!
//! Every training and embedding path is deterministic per seed: identical
//! inputs produce bit-identical models and files.

pub mod baselines;
pub mod cli;
pub mod datasets;
pub mod embeddings;
pub mod head;
pub mod metrics;
pub mod rng;
