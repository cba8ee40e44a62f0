//! Deterministic signed feature hashing: a desk-scale stand-in for the real
//! multilingual encoder. One hash picks a bucket per token, a second hash
//! picks the sign, and the accumulated vector is scaled to unit norm.
//!
//! Both hashes are FNV-1a over the token bytes with a domain tag and the
//! configured seed mixed in, so the whole backend is a pure function of
//! `(text, dim, max_tokens, seed)` on every platform.

use super::{l2_normalize, Backend, EmbedderConfig, EmbeddingError, EmbeddingVector, TextEmbedder};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(seed: u64, domain: u8, bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for byte in seed.to_le_bytes() {
        hash = (hash ^ byte as u64).wrapping_mul(FNV_PRIME);
    }
    hash = (hash ^ domain as u64).wrapping_mul(FNV_PRIME);
    for &byte in bytes {
        hash = (hash ^ byte as u64).wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Embed a text by signed feature hashing of its whitespace tokens.
///
/// Tokens beyond `config.max_tokens` are dropped, mirroring the token budget
/// of the encoder this backend stands in for.
pub fn embed_hashing(text: &str, config: &EmbedderConfig) -> Result<EmbeddingVector, EmbeddingError> {
    let mut accumulated = vec![0.0f64; config.dim];
    let mut token_count = 0usize;
    for token in text.split_whitespace().take(config.max_tokens) {
        token_count += 1;
        let bytes = token.as_bytes();
        let bucket = (fnv1a(config.seed, 0, bytes) % config.dim as u64) as usize;
        let sign = if fnv1a(config.seed, 1, bytes) & 1 == 0 {
            1.0
        } else {
            -1.0
        };
        accumulated[bucket] += sign;
    }
    if token_count == 0 {
        return Err(EmbeddingError::EmptyText);
    }
    l2_normalize(&EmbeddingVector(accumulated))
}

/// [`TextEmbedder`] wrapper around [`embed_hashing`].
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    config: EmbedderConfig,
}

impl HashingEmbedder {
    pub fn new(config: EmbedderConfig) -> Result<Self, EmbeddingError> {
        if config.backend != Backend::Hashing {
            return Err(EmbeddingError::Config(format!(
                "hashing embedder needs a hashing config, got {}",
                config.backend.as_str()
            )));
        }
        Ok(Self { config })
    }

    pub fn config(&self) -> &EmbedderConfig {
        &self.config
    }
}

impl TextEmbedder for HashingEmbedder {
    fn dim(&self) -> usize {
        self.config.dim
    }

    fn fingerprint(&self) -> String {
        self.config.fingerprint()
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError> {
        embed_hashing(text, &self.config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    fn config(dim: usize, seed: u64) -> EmbedderConfig {
        EmbedderConfig::hashing(dim, seed).unwrap()
    }

    #[test]
    fn deterministic_for_equal_inputs() {
        let c = config(64, 42);
        let a = embed_hashing("joy and fear in the hills", &c).unwrap();
        let b = embed_hashing("joy and fear in the hills", &c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn output_has_unit_norm() {
        let c = config(256, 0);
        let v = embed_hashing("a b c d e f g", &c).unwrap();
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_and_whitespace_texts_error() {
        let c = config(16, 0);
        assert!(matches!(embed_hashing("", &c), Err(EmbeddingError::EmptyText)));
        assert!(matches!(
            embed_hashing(" \t\n", &c),
            Err(EmbeddingError::EmptyText)
        ));
    }

    #[test]
    fn max_tokens_truncates() {
        let c = config(32, 7).with_max_tokens(2).unwrap();
        let short = embed_hashing("alpha beta", &c).unwrap();
        let long = embed_hashing("alpha beta gamma delta", &c).unwrap();
        assert_eq!(short, long);
    }

    #[test]
    fn seed_changes_vectors() {
        let a = embed_hashing("same text", &config(64, 1)).unwrap();
        let b = embed_hashing("same text", &config(64, 2)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn non_latin_scripts_embed() {
        let c = config(64, 3);
        let v = embed_hashing(
            "\u{935}\u{939} \u{905}\u{92a}\u{928}\u{947} \u{926}\u{94b}\u{938}\u{94d}\u{924}\u{94b}\u{902}",
            &c,
        )
        .unwrap();
        assert_eq!(v.dim(), 64);
    }

    #[test]
    fn random_tokens_are_nearly_orthogonal() {
        // 1,000 distinct tokens at dim=256: mean |cos| over all pairs stays
        // near the bucket-collision rate, far below 0.2.
        let c = config(256, 5);
        let mut rng = SplitMix64::new(17);
        let vectors: Vec<EmbeddingVector> = (0..1000)
            .map(|i| {
                let token = format!("tok{}_{:x}", i, rng.next_u64());
                embed_hashing(&token, &c).unwrap()
            })
            .collect();
        let mut total = 0.0f64;
        let mut pairs = 0usize;
        for i in 0..vectors.len() {
            for j in (i + 1)..vectors.len() {
                let dot: f64 = vectors[i]
                    .iter()
                    .zip(vectors[j].iter())
                    .map(|(a, b)| a * b)
                    .sum();
                total += dot.abs();
                pairs += 1;
            }
        }
        let mean_abs_cos = total / pairs as f64;
        assert!(mean_abs_cos < 0.2, "mean |cos| = {mean_abs_cos}");
    }

    proptest! {
        #[test]
        fn pure_function_of_inputs(text in "[a-z ]{1,60}", seed in 0u64..100) {
            prop_assume!(!text.trim().is_empty());
            let c = config(32, seed);
            let a = embed_hashing(&text, &c);
            let b = embed_hashing(&text, &c);
            match (a, b) {
                (Ok(x), Ok(y)) => {
                    prop_assert_eq!(x.clone(), y);
                    let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    prop_assert!((norm - 1.0).abs() < 1e-9);
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "determinism violated"),
            }
        }
    }
}
