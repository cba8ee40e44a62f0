//! Baseline model checkpoints: schema, scaler, learner kind, and per-label
//! parameters in the same key=value text layout as head checkpoints.

use std::fs;
use std::path::Path;

use crate::datasets::{EmotionLabel, LabelSchema};
use crate::embeddings::ScalerParams;

use super::{BaselineError, BinaryLearner, GnbParams, LearnerKind, LogRegParams, MultiOutputModel};

const FORMAT_TAG: &str = "emoclass-baseline-v1";

fn floats(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.8e}"))
        .collect::<Vec<_>>()
        .join("\t")
}

pub fn save_baseline(model: &MultiOutputModel, path: impl AsRef<Path>) -> Result<(), BaselineError> {
    let mut out = String::new();
    out.push_str(&format!("format={FORMAT_TAG}\n"));
    out.push_str(&format!("language={}\n", model.schema.language()));
    out.push_str(&format!("labels={}\n", model.schema.label_names().join(",")));
    out.push_str(&format!("kind={}\n", model.kind.as_str()));
    out.push_str(&format!("fingerprint={}\n", model.embedder_fingerprint));
    out.push_str(&format!("dim={}\n", model.scaler.dim()));
    out.push_str(&format!("scaler.mean={}\n", floats(&model.scaler.mean)));
    out.push_str(&format!("scaler.std={}\n", floats(&model.scaler.std)));
    for (i, learner) in model.learners.iter().enumerate() {
        match learner {
            BinaryLearner::LogReg(p) => {
                out.push_str(&format!("label.{i}.kind=logreg\n"));
                out.push_str(&format!("label.{i}.w={}\n", floats(&p.weights)));
                out.push_str(&format!("label.{i}.bias={:.8e}\n", p.bias));
                out.push_str(&format!("label.{i}.l2_penalty={}\n", p.l2_penalty));
                out.push_str(&format!("label.{i}.max_iter={}\n", p.max_iter));
                out.push_str(&format!("label.{i}.tol={}\n", p.tol));
            }
            BinaryLearner::Gnb(p) => {
                out.push_str(&format!("label.{i}.kind=gnb\n"));
                out.push_str(&format!("label.{i}.log_prior={}\n", floats(&p.log_prior)));
                out.push_str(&format!("label.{i}.mean0={}\n", floats(&p.mean[0])));
                out.push_str(&format!("label.{i}.mean1={}\n", floats(&p.mean[1])));
                out.push_str(&format!("label.{i}.var0={}\n", floats(&p.var[0])));
                out.push_str(&format!("label.{i}.var1={}\n", floats(&p.var[1])));
            }
            BinaryLearner::Constant(class) => {
                out.push_str(&format!("label.{i}.kind=constant\n"));
                out.push_str(&format!("label.{i}.value={class}\n"));
            }
        }
    }
    fs::write(path.as_ref(), out)?;
    Ok(())
}

struct Fields(Vec<(String, String)>);

impl Fields {
    fn get(&self, key: &str) -> Result<&str, BaselineError> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| BaselineError::Checkpoint(format!("missing field {key:?}")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, BaselineError> {
        self.get(key)?
            .parse()
            .map_err(|_| BaselineError::Checkpoint(format!("bad value for {key:?}")))
    }

    fn parse_floats(&self, key: &str) -> Result<Vec<f64>, BaselineError> {
        self.get(key)?
            .split('\t')
            .map(|field| {
                field.parse().map_err(|_| {
                    BaselineError::Checkpoint(format!("bad float in {key:?}: {field:?}"))
                })
            })
            .collect()
    }
}

pub fn load_baseline(path: impl AsRef<Path>) -> Result<MultiOutputModel, BaselineError> {
    let content = fs::read_to_string(path.as_ref())?;
    let mut raw = Vec::new();
    for line in content.lines() {
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| BaselineError::Checkpoint(format!("bad line {line:?}")))?;
        raw.push((key.to_string(), value.to_string()));
    }
    let fields = Fields(raw);

    if fields.get("format")? != FORMAT_TAG {
        return Err(BaselineError::Checkpoint(format!(
            "unsupported format {:?}",
            fields.get("format")?
        )));
    }

    let labels: Vec<EmotionLabel> = fields
        .get("labels")?
        .split(',')
        .map(|name| {
            EmotionLabel::from_name(name)
                .ok_or_else(|| BaselineError::Checkpoint(format!("unknown label {name:?}")))
        })
        .collect::<Result<_, _>>()?;
    let schema = LabelSchema::new(fields.get("language")?.to_string(), labels)
        .map_err(|e| BaselineError::Checkpoint(format!("bad schema: {e}")))?;
    let kind = LearnerKind::parse(fields.get("kind")?)
        .ok_or_else(|| BaselineError::Checkpoint("unknown learner kind".into()))?;

    let dim: usize = fields.parse("dim")?;
    let mean = fields.parse_floats("scaler.mean")?;
    let std = fields.parse_floats("scaler.std")?;
    if mean.len() != dim || std.len() != dim {
        return Err(BaselineError::Checkpoint("scaler length mismatch".into()));
    }

    let mut learners = Vec::with_capacity(schema.len());
    for i in 0..schema.len() {
        let prefix = format!("label.{i}");
        let learner = match fields.get(&format!("{prefix}.kind"))? {
            "logreg" => {
                let weights = fields.parse_floats(&format!("{prefix}.w"))?;
                if weights.len() != dim {
                    return Err(BaselineError::Checkpoint(format!(
                        "label {i} weights length mismatch"
                    )));
                }
                BinaryLearner::LogReg(LogRegParams {
                    weights,
                    bias: fields.parse(&format!("{prefix}.bias"))?,
                    l2_penalty: fields.parse(&format!("{prefix}.l2_penalty"))?,
                    max_iter: fields.parse(&format!("{prefix}.max_iter"))?,
                    tol: fields.parse(&format!("{prefix}.tol"))?,
                })
            }
            "gnb" => {
                let log_prior = fields.parse_floats(&format!("{prefix}.log_prior"))?;
                if log_prior.len() != 2 {
                    return Err(BaselineError::Checkpoint(format!(
                        "label {i} needs 2 log priors"
                    )));
                }
                let mean0 = fields.parse_floats(&format!("{prefix}.mean0"))?;
                let mean1 = fields.parse_floats(&format!("{prefix}.mean1"))?;
                let var0 = fields.parse_floats(&format!("{prefix}.var0"))?;
                let var1 = fields.parse_floats(&format!("{prefix}.var1"))?;
                if [&mean0, &mean1, &var0, &var1].iter().any(|v| v.len() != dim) {
                    return Err(BaselineError::Checkpoint(format!(
                        "label {i} parameter length mismatch"
                    )));
                }
                BinaryLearner::Gnb(GnbParams {
                    log_prior: [log_prior[0], log_prior[1]],
                    mean: [mean0, mean1],
                    var: [var0, var1],
                })
            }
            "constant" => {
                let value: u8 = fields.parse(&format!("{prefix}.value"))?;
                BinaryLearner::Constant(value)
            }
            other => {
                return Err(BaselineError::Checkpoint(format!(
                    "unknown learner kind {other:?}"
                )))
            }
        };
        learners.push(learner);
    }

    Ok(MultiOutputModel {
        schema,
        kind,
        scaler: ScalerParams { mean, std },
        learners,
        embedder_fingerprint: fields.get("fingerprint")?.to_string(),
    })
}
