//! Shared helpers for integration tests: a seeded, linearly separable
//! synthetic corpus where each label is switched on by its own keyword.

#![allow(dead_code)]

use emoclass::datasets::{Dataset, EmotionLabel, LabelSchema, Sample, Split};
use emoclass::embeddings::{embed_hashing, EmbedderConfig};
use emoclass::head::EmbeddedSplit;
use emoclass::rng::SplitMix64;

pub const HASH_DIM: usize = 64;
pub const HASH_SEED: u64 = 5;

pub fn hashing_config() -> EmbedderConfig {
    EmbedderConfig::hashing(HASH_DIM, HASH_SEED).unwrap()
}

pub fn synthetic_schema() -> LabelSchema {
    LabelSchema::new(
        "syn",
        vec![EmotionLabel::Anger, EmotionLabel::Fear, EmotionLabel::Joy],
    )
    .unwrap()
}

/// English-style 5-label schema (no disgust).
pub fn english_schema() -> LabelSchema {
    LabelSchema::new(
        "eng",
        vec![
            EmotionLabel::Anger,
            EmotionLabel::Fear,
            EmotionLabel::Joy,
            EmotionLabel::Sadness,
            EmotionLabel::Surprise,
        ],
    )
    .unwrap()
}

/// Random label vectors over a keyword text: label k present exactly when
/// keyword k appears, so any linear model over hashed tokens can separate it.
pub fn synthetic_dataset(seed: u64, n: usize, split: Split) -> Dataset {
    keyword_dataset(synthetic_schema(), seed, n, split)
}

pub fn keyword_dataset(schema: LabelSchema, seed: u64, n: usize, split: Split) -> Dataset {
    let mut rng = SplitMix64::new(seed);
    let keywords: Vec<String> = schema
        .labels()
        .iter()
        .map(|l| format!("kw_{}", l.name()))
        .collect();
    let samples = (0..n)
        .map(|_| {
            let labels: Vec<u8> = (0..schema.len()).map(|_| rng.next_below(2) as u8).collect();
            let mut text = String::from("base");
            for (keyword, &active) in keywords.iter().zip(labels.iter()) {
                if active == 1 {
                    text.push(' ');
                    text.push_str(keyword);
                }
            }
            Sample {
                text,
                labels,
                extras: Vec::new(),
            }
        })
        .collect();
    Dataset {
        schema,
        split,
        extra_columns: Vec::new(),
        samples,
    }
}

pub fn embed_dataset(dataset: &Dataset) -> EmbeddedSplit {
    let config = hashing_config();
    let xs = dataset
        .samples
        .iter()
        .map(|s| embed_hashing(&s.text, &config).unwrap())
        .collect();
    EmbeddedSplit::new(dataset.schema.clone(), xs, dataset.labels_matrix()).unwrap()
}

pub fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}
