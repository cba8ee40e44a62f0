//! Model checkpoints as structured text: schema, threshold, embedder
//! fingerprint, the weights at 9 significant digits, the config used, and the
//! per-epoch history. Writing is deterministic, so identical models produce
//! byte-identical files.

use std::fs;
use std::path::Path;

use crate::datasets::{EmotionLabel, LabelSchema};

use super::{EpochRecord, HeadError, HeadParams, TrainConfig, TrainedModel};

const FORMAT_TAG: &str = "emoclass-model-v1";

fn write_floats(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push('\t');
        }
        out.push_str(&format!("{v:.8e}"));
    }
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<(), HeadError> {
    let mut out = String::new();
    out.push_str(&format!("format={FORMAT_TAG}\n"));
    out.push_str(&format!("language={}\n", model.schema.language()));
    out.push_str(&format!("labels={}\n", model.schema.label_names().join(",")));
    out.push_str(&format!("threshold={}\n", model.threshold));
    out.push_str(&format!("fingerprint={}\n", model.embedder_fingerprint));
    out.push_str(&format!("best_epoch={}\n", model.best_epoch));

    let c = &model.config;
    out.push_str(&format!("config.learning_rate={}\n", c.learning_rate));
    out.push_str(&format!("config.beta1={}\n", c.beta1));
    out.push_str(&format!("config.beta2={}\n", c.beta2));
    out.push_str(&format!("config.epsilon={}\n", c.epsilon));
    out.push_str(&format!("config.weight_decay={}\n", c.weight_decay));
    out.push_str(&format!("config.batch_size={}\n", c.batch_size));
    out.push_str(&format!("config.dropout_rate={}\n", c.dropout_rate));
    out.push_str(&format!("config.smoothing_alpha={}\n", c.smoothing_alpha));
    out.push_str(&format!("config.clip_max_norm={}\n", c.clip_max_norm));
    out.push_str(&format!("config.patience={}\n", c.patience));
    out.push_str(&format!("config.max_epochs={}\n", c.max_epochs));
    out.push_str(&format!("config.threshold={}\n", c.threshold));
    out.push_str(&format!("config.seed={}\n", c.seed));

    out.push_str(&format!("rows={}\n", model.params.label_count()));
    out.push_str(&format!("cols={}\n", model.params.dim()));
    for (i, row) in model.params.weights.iter().enumerate() {
        out.push_str(&format!("w.{i}="));
        write_floats(&mut out, row);
        out.push('\n');
    }
    out.push_str("b=");
    write_floats(&mut out, &model.params.bias);
    out.push('\n');

    out.push_str(&format!("history.count={}\n", model.history.len()));
    for record in &model.history {
        out.push_str(&format!(
            "history.{}={:.8e}\t{:.8e}\n",
            record.epoch, record.train_loss, record.dev_macro_f1
        ));
    }

    fs::write(path.as_ref(), out)?;
    Ok(())
}

struct Fields(Vec<(String, String)>);

impl Fields {
    fn get(&self, key: &str) -> Result<&str, HeadError> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| HeadError::Checkpoint(format!("missing field {key:?}")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, HeadError> {
        self.get(key)?
            .parse()
            .map_err(|_| HeadError::Checkpoint(format!("bad value for {key:?}")))
    }
}

fn parse_floats(key: &str, value: &str) -> Result<Vec<f64>, HeadError> {
    value
        .split('\t')
        .map(|field| {
            field
                .parse()
                .map_err(|_| HeadError::Checkpoint(format!("bad float in {key:?}: {field:?}")))
        })
        .collect()
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel, HeadError> {
    let content = fs::read_to_string(path.as_ref())?;
    let mut fields = Vec::new();
    for line in content.lines() {
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| HeadError::Checkpoint(format!("bad line {line:?}")))?;
        fields.push((key.to_string(), value.to_string()));
    }
    let fields = Fields(fields);

    if fields.get("format")? != FORMAT_TAG {
        return Err(HeadError::Checkpoint(format!(
            "unsupported format {:?}",
            fields.get("format")?
        )));
    }

    let language = fields.get("language")?.to_string();
    let labels: Vec<EmotionLabel> = fields
        .get("labels")?
        .split(',')
        .map(|name| {
            EmotionLabel::from_name(name)
                .ok_or_else(|| HeadError::Checkpoint(format!("unknown label {name:?}")))
        })
        .collect::<Result<_, _>>()?;
    let schema = LabelSchema::new(language, labels)
        .map_err(|e| HeadError::Checkpoint(format!("bad schema: {e}")))?;

    let config = TrainConfig {
        learning_rate: fields.parse("config.learning_rate")?,
        beta1: fields.parse("config.beta1")?,
        beta2: fields.parse("config.beta2")?,
        epsilon: fields.parse("config.epsilon")?,
        weight_decay: fields.parse("config.weight_decay")?,
        batch_size: fields.parse("config.batch_size")?,
        dropout_rate: fields.parse("config.dropout_rate")?,
        smoothing_alpha: fields.parse("config.smoothing_alpha")?,
        clip_max_norm: fields.parse("config.clip_max_norm")?,
        patience: fields.parse("config.patience")?,
        max_epochs: fields.parse("config.max_epochs")?,
        threshold: fields.parse("config.threshold")?,
        seed: fields.parse("config.seed")?,
    };

    let rows: usize = fields.parse("rows")?;
    let cols: usize = fields.parse("cols")?;
    if rows != schema.len() {
        return Err(HeadError::Checkpoint(format!(
            "weight rows {rows} do not match {} labels",
            schema.len()
        )));
    }
    let mut weights = Vec::with_capacity(rows);
    for i in 0..rows {
        let key = format!("w.{i}");
        let row = parse_floats(&key, fields.get(&key)?)?;
        if row.len() != cols {
            return Err(HeadError::Checkpoint(format!(
                "row {i} has {} values, expected {cols}",
                row.len()
            )));
        }
        weights.push(row);
    }
    let bias = parse_floats("b", fields.get("b")?)?;
    if bias.len() != rows {
        return Err(HeadError::Checkpoint(format!(
            "bias has {} values, expected {rows}",
            bias.len()
        )));
    }

    let history_count: usize = fields.parse("history.count")?;
    let mut history = Vec::with_capacity(history_count);
    for (key, value) in &fields.0 {
        if let Some(epoch_str) = key.strip_prefix("history.") {
            if epoch_str == "count" {
                continue;
            }
            let epoch: usize = epoch_str
                .parse()
                .map_err(|_| HeadError::Checkpoint(format!("bad history key {key:?}")))?;
            let values = parse_floats(key, value)?;
            if values.len() != 2 {
                return Err(HeadError::Checkpoint(format!(
                    "history entry {key:?} needs 2 values"
                )));
            }
            history.push(EpochRecord {
                epoch,
                train_loss: values[0],
                dev_macro_f1: values[1],
            });
        }
    }
    if history.len() != history_count {
        return Err(HeadError::Checkpoint(format!(
            "history declares {history_count} entries, found {}",
            history.len()
        )));
    }

    Ok(TrainedModel {
        params: HeadParams { weights, bias },
        schema,
        embedder_fingerprint: fields.get("fingerprint")?.to_string(),
        threshold: fields.parse("threshold")?,
        config,
        history,
        best_epoch: fields.parse("best_epoch")?,
    })
}
