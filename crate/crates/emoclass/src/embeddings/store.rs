//! On-disk exchange format for precomputed embeddings.
//!
//! The format is plain text so stores stay diffable and language-neutral:
//! a header line `dim=<D> count=<N>`, then one line per entry of
//! `key<TAB>f1<TAB>...<TAB>fD` with floats at 9 significant digits.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{EmbeddingError, EmbeddingVector};

/// Keyed collection of same-dimension vectors, preserving insertion order.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dim: usize,
    keys: Vec<String>,
    vectors: Vec<EmbeddingVector>,
    index: HashMap<String, usize>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            keys: Vec::new(),
            vectors: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn insert(&mut self, key: impl Into<String>, vector: EmbeddingVector) -> Result<(), EmbeddingError> {
        let key = key.into();
        if vector.dim() != self.dim {
            return Err(EmbeddingError::DimMismatch {
                expected: self.dim,
                got: vector.dim(),
            });
        }
        if key.contains('\t') || key.contains('\n') {
            return Err(EmbeddingError::Format(format!(
                "key {key:?} contains tab or newline"
            )));
        }
        if self.index.contains_key(&key) {
            return Err(EmbeddingError::DuplicateKey(key));
        }
        self.index.insert(key.clone(), self.vectors.len());
        self.keys.push(key);
        self.vectors.push(vector);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&EmbeddingVector> {
        self.index.get(key).map(|&i| &self.vectors[i])
    }

    pub fn contains(&self, key: &str) -> bool {
        self.index.contains_key(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &EmbeddingVector)> {
        self.keys
            .iter()
            .map(String::as_str)
            .zip(self.vectors.iter())
    }
}

/// Write a store in the exchange format. Entry order is the insertion order,
/// so saving is deterministic.
pub fn save_store(store: &EmbeddingStore, path: impl AsRef<Path>) -> Result<(), EmbeddingError> {
    let file = File::create(path.as_ref())?;
    let mut w = BufWriter::new(file);
    writeln!(w, "dim={} count={}", store.dim(), store.len())?;
    for (key, vector) in store.iter() {
        write!(w, "{key}")?;
        for value in vector.iter() {
            write!(w, "\t{value:.8e}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a store written by [`save_store`].
pub fn load_store(path: impl AsRef<Path>) -> Result<EmbeddingStore, EmbeddingError> {
    let file = File::open(path.as_ref())?;
    let mut lines = BufReader::new(file).lines();

    let header = lines
        .next()
        .ok_or_else(|| EmbeddingError::Format("empty file".into()))??;
    let (dim, count) = parse_header(&header)?;

    let mut store = EmbeddingStore::new(dim);
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let key = fields
            .next()
            .ok_or_else(|| EmbeddingError::Format("missing key".into()))?;
        let mut values = Vec::with_capacity(dim);
        for field in fields {
            let value: f64 = field
                .parse()
                .map_err(|_| EmbeddingError::Format(format!("bad float {field:?}")))?;
            if !value.is_finite() {
                return Err(EmbeddingError::Format(format!(
                    "non-finite value for key {key:?}"
                )));
            }
            values.push(value);
        }
        if values.len() != dim {
            return Err(EmbeddingError::DimMismatch {
                expected: dim,
                got: values.len(),
            });
        }
        store.insert(key, EmbeddingVector(values))?;
    }
    if store.len() != count {
        return Err(EmbeddingError::Format(format!(
            "header declares {count} entries, file has {}",
            store.len()
        )));
    }
    Ok(store)
}

fn parse_header(header: &str) -> Result<(usize, usize), EmbeddingError> {
    let mut dim = None;
    let mut count = None;
    for part in header.split_whitespace() {
        match part.split_once('=') {
            Some(("dim", v)) => dim = v.parse().ok(),
            Some(("count", v)) => count = v.parse().ok(),
            _ => return Err(EmbeddingError::Format(format!("bad header field {part:?}"))),
        }
    }
    match (dim, count) {
        (Some(d), Some(c)) if d >= 1 => Ok((d, c)),
        _ => Err(EmbeddingError::Format(format!("bad header {header:?}"))),
    }
}
