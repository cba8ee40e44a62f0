//! Emotion-labeled text corpora in the shared-task CSV layout.
//!
//! A corpus file is an RFC 4180 CSV (UTF-8, no BOM) with a header row naming
//! a `text` column and five or six emotion columns; an optional `id` column is
//! carried through untouched. Label cells are strictly `0` or `1`. Column
//! positions are free; the header decides everything.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

/// The six tracked emotions, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EmotionLabel {
    Anger,
    Disgust,
    Fear,
    Joy,
    Sadness,
    Surprise,
}

impl EmotionLabel {
    pub const ALL: [EmotionLabel; 6] = [
        EmotionLabel::Anger,
        EmotionLabel::Disgust,
        EmotionLabel::Fear,
        EmotionLabel::Joy,
        EmotionLabel::Sadness,
        EmotionLabel::Surprise,
    ];

    /// Lowercase name used in CSV headers and prediction dictionaries.
    pub fn name(self) -> &'static str {
        match self {
            EmotionLabel::Anger => "anger",
            EmotionLabel::Disgust => "disgust",
            EmotionLabel::Fear => "fear",
            EmotionLabel::Joy => "joy",
            EmotionLabel::Sadness => "sadness",
            EmotionLabel::Surprise => "surprise",
        }
    }

    /// Capitalized name used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            EmotionLabel::Anger => "Anger",
            EmotionLabel::Disgust => "Disgust",
            EmotionLabel::Fear => "Fear",
            EmotionLabel::Joy => "Joy",
            EmotionLabel::Sadness => "Sadness",
            EmotionLabel::Surprise => "Surprise",
        }
    }

    /// Case-insensitive lookup; trims surrounding whitespace.
    pub fn from_name(name: &str) -> Option<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "anger" => Some(EmotionLabel::Anger),
            "disgust" => Some(EmotionLabel::Disgust),
            "fear" => Some(EmotionLabel::Fear),
            "joy" => Some(EmotionLabel::Joy),
            "sadness" => Some(EmotionLabel::Sadness),
            "surprise" => Some(EmotionLabel::Surprise),
            _ => None,
        }
    }

    fn canonical_index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which split of a corpus a file holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Some(Split::Train),
            "dev" => Some(Split::Dev),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Key under which a sample's embedding is stored: `<split>:<row_index>`.
/// One store can then hold several splits of the same corpus.
pub fn sample_key(split: Split, index: usize) -> String {
    format!("{}:{}", split.as_str(), index)
}

/// An ordered subset of the six emotions for one language.
///
/// Labels always appear in canonical order with no duplicates. Corpus files
/// ingested through [`infer_schema`] must carry at least five emotion columns;
/// schemas built directly (e.g. for synthetic data) may be smaller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSchema {
    language: String,
    labels: Vec<EmotionLabel>,
}

impl LabelSchema {
    pub fn new(language: impl Into<String>, labels: Vec<EmotionLabel>) -> Result<Self, DatasetError> {
        if labels.is_empty() {
            return Err(DatasetError::SchemaMismatch("schema has no labels".into()));
        }
        let ordered = labels
            .windows(2)
            .all(|w| w[0].canonical_index() < w[1].canonical_index());
        if !ordered {
            return Err(DatasetError::SchemaMismatch(
                "labels must be unique and in canonical order".into(),
            ));
        }
        Ok(Self {
            language: language.into(),
            labels,
        })
    }

    /// The default schema: all six emotions.
    pub fn full(language: impl Into<String>) -> Self {
        Self {
            language: language.into(),
            labels: EmotionLabel::ALL.to_vec(),
        }
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn labels(&self) -> &[EmotionLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label_names(&self) -> Vec<String> {
        self.labels.iter().map(|l| l.name().to_string()).collect()
    }

    pub fn index_of(&self, label: EmotionLabel) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }
}

/// One text with its binary label vector and any opaque extra cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub text: String,
    /// One entry per schema label, each 0 or 1. All-zero is legal (no emotion).
    pub labels: Vec<u8>,
    /// Cells of extra columns (e.g. `id`), aligned with `Dataset::extra_columns`.
    pub extras: Vec<String>,
}

/// An ordered, immutable collection of samples under one schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub schema: LabelSchema,
    pub split: Split,
    /// Names of columns preserved but not interpreted, in source order.
    pub extra_columns: Vec<String>,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Label vectors as an N x L matrix.
    pub fn labels_matrix(&self) -> Vec<Vec<u8>> {
        self.samples.iter().map(|s| s.labels.clone()).collect()
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("header has no text column")]
    MissingTextColumn,
    #[error("header has {found} emotion columns, at least 5 are required")]
    TooFewEmotionColumns { found: usize },
    #[error("unrecognized column {0:?}")]
    UnknownColumn(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
}

/// Columns carried through as opaque extras rather than interpreted.
const OPAQUE_COLUMNS: &[&str] = &["id"];

fn is_opaque_column(name: &str) -> bool {
    OPAQUE_COLUMNS.iter().any(|c| name.eq_ignore_ascii_case(c))
}

/// Derive a schema from a CSV header.
///
/// The header must contain a `text` column and at least five recognized
/// emotion columns; the resulting schema lists them in canonical order
/// regardless of their positions in the file.
pub fn infer_schema(header: &[String], language: &str) -> Result<LabelSchema, DatasetError> {
    let mut text_seen = false;
    let mut emotions: Vec<EmotionLabel> = Vec::new();
    for col in header {
        let name = col.trim();
        if name.eq_ignore_ascii_case("text") {
            if text_seen {
                return Err(DatasetError::SchemaMismatch("duplicate text column".into()));
            }
            text_seen = true;
        } else if let Some(label) = EmotionLabel::from_name(name) {
            if emotions.contains(&label) {
                return Err(DatasetError::SchemaMismatch(format!(
                    "duplicate emotion column {name:?}"
                )));
            }
            emotions.push(label);
        } else if !is_opaque_column(name) {
            return Err(DatasetError::UnknownColumn(name.to_string()));
        }
    }
    if !text_seen {
        return Err(DatasetError::MissingTextColumn);
    }
    if emotions.len() < 5 {
        return Err(DatasetError::TooFewEmotionColumns {
            found: emotions.len(),
        });
    }
    emotions.sort_by_key(|l| l.canonical_index());
    LabelSchema::new(language, emotions)
}

/// Load a dataset from a CSV file. The file's header must describe exactly
/// the expected schema.
pub fn load_dataset(
    path: impl AsRef<Path>,
    schema: &LabelSchema,
    split: Split,
) -> Result<Dataset, DatasetError> {
    let file = File::open(path.as_ref())?;
    load_dataset_from_reader(BufReader::new(file), schema, split)
}

/// Same as [`load_dataset`] but from any reader, which keeps parsing testable
/// without touching the filesystem.
pub fn load_dataset_from_reader<R: Read>(
    reader: R,
    schema: &LabelSchema,
    split: Split,
) -> Result<Dataset, DatasetError> {
    let mut csv_reader = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = csv_reader.headers()?.iter().map(str::to_string).collect();

    let file_schema = infer_schema(&header, schema.language())?;
    if file_schema != *schema {
        return Err(DatasetError::SchemaMismatch(format!(
            "file labels {:?} do not match expected {:?}",
            file_schema.label_names(),
            schema.label_names()
        )));
    }

    let mut text_col = 0usize;
    let mut label_cols: Vec<(usize, String)> = Vec::new(); // aligned with schema order
    let mut extra_cols: Vec<(usize, String)> = Vec::new();
    for label in schema.labels() {
        let pos = header
            .iter()
            .position(|c| EmotionLabel::from_name(c) == Some(*label))
            .expect("schema match guarantees presence");
        label_cols.push((pos, header[pos].trim().to_string()));
    }
    for (pos, col) in header.iter().enumerate() {
        let name = col.trim();
        if name.eq_ignore_ascii_case("text") {
            text_col = pos;
        } else if is_opaque_column(name) {
            extra_cols.push((pos, name.to_string()));
        }
    }

    let extra_columns: Vec<String> = extra_cols.iter().map(|(_, n)| n.clone()).collect();
    let mut samples = Vec::new();
    for (i, record) in csv_reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let text = record.get(text_col).unwrap_or("").to_string();
        if text.trim().is_empty() {
            return Err(DatasetError::Parse {
                row,
                column: "text".into(),
                message: "empty text".into(),
            });
        }
        let mut labels = Vec::with_capacity(schema.len());
        for (pos, name) in &label_cols {
            let cell = record.get(*pos).unwrap_or("").trim();
            let value = match cell {
                "0" => 0u8,
                "1" => 1u8,
                other => {
                    return Err(DatasetError::Parse {
                        row,
                        column: name.clone(),
                        message: format!("label cell must be 0 or 1, got {other:?}"),
                    })
                }
            };
            labels.push(value);
        }
        let extras = extra_cols
            .iter()
            .map(|(pos, _)| record.get(*pos).unwrap_or("").to_string())
            .collect();
        samples.push(Sample { text, labels, extras });
    }

    Ok(Dataset {
        schema: schema.clone(),
        split,
        extra_columns,
        samples,
    })
}

/// Write a dataset back to CSV: `text`, the schema labels in canonical order,
/// then any extra columns. Output is deterministic so identical datasets
/// produce byte-identical files.
pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let file = File::create(path.as_ref())?;
    save_dataset_to_writer(dataset, BufWriter::new(file))
}

pub fn save_dataset_to_writer<W: Write>(dataset: &Dataset, writer: W) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = vec!["text".into()];
    header.extend(dataset.schema.label_names());
    header.extend(dataset.extra_columns.iter().cloned());
    w.write_record(&header)?;
    for sample in &dataset.samples {
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        record.push(sample.text.clone());
        record.extend(sample.labels.iter().map(|v| v.to_string()));
        record.extend(sample.extras.iter().cloned());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-split sample counts and per-label positive counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitCount {
    pub split: Split,
    pub samples: usize,
    /// Positives per label, aligned with the schema.
    pub label_positives: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitStats {
    pub labels: Vec<String>,
    pub splits: Vec<SplitCount>,
    pub total: usize,
}

/// Count samples and positives per split. All datasets must share one schema.
pub fn split_stats(datasets: &[Dataset]) -> Result<SplitStats, DatasetError> {
    let Some(first) = datasets.first() else {
        return Ok(SplitStats {
            labels: Vec::new(),
            splits: Vec::new(),
            total: 0,
        });
    };
    let schema = &first.schema;
    let mut splits = Vec::with_capacity(datasets.len());
    let mut total = 0usize;
    for ds in datasets {
        if ds.schema != *schema {
            return Err(DatasetError::SchemaMismatch(format!(
                "dataset for split {} has labels {:?}, expected {:?}",
                ds.split,
                ds.schema.label_names(),
                schema.label_names()
            )));
        }
        let mut positives = vec![0usize; schema.len()];
        for sample in &ds.samples {
            for (i, &v) in sample.labels.iter().enumerate() {
                positives[i] += v as usize;
            }
        }
        total += ds.len();
        splits.push(SplitCount {
            split: ds.split,
            samples: ds.len(),
            label_positives: positives,
        });
    }
    Ok(SplitStats {
        labels: schema.label_names(),
        splits,
        total,
    })
}
