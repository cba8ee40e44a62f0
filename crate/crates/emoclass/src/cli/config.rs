//! Run configuration assembly: built-in defaults, then the `EMOCLASS_SEED`
//! environment variable, then the key=value config file, then command-line
//! flags, each layer overriding the one below.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::head::TrainConfig;

use super::CliError;

pub const DEFAULT_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

/// Everything a training run needs, resolved from all config layers.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub train_csv: String,
    pub dev_csv: String,
    pub embeddings: String,
    pub language: String,
    pub out_model: String,
    /// Embedder identity recorded in checkpoints; None means the opaque
    /// store identity.
    pub fingerprint: Option<String>,
    pub seeds: Vec<u64>,
    pub train: TrainConfig,
}

/// Parse a flat key=value file. `#` starts a comment; blank lines are fine.
pub fn parse_key_values(path: impl AsRef<Path>) -> Result<HashMap<String, String>, CliError> {
    let path = path.as_ref();
    let content = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for (lineno, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::config(format!(
                "{}:{}: expected key=value, got {line:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::config(format!("bad value for {key}: {value:?}")))
}

fn parse_seed_list(source: &str, value: &str) -> Result<Vec<u64>, CliError> {
    let seeds: Result<Vec<u64>, _> = value
        .split(',')
        .map(|s| s.trim().parse::<u64>())
        .collect();
    match seeds {
        Ok(seeds) if !seeds.is_empty() => Ok(seeds),
        _ => Err(CliError::config(format!(
            "{source}: bad seed list {value:?}, expected comma-separated integers"
        ))),
    }
}

impl RunConfig {
    /// Resolve a training run configuration. `flags` are the already-parsed
    /// command-line options (strongest layer).
    pub fn resolve(
        config_file: Option<&str>,
        flag_seeds: &[u64],
        flags: &HashMap<&'static str, String>,
    ) -> Result<Self, CliError> {
        let file = match config_file {
            Some(path) => parse_key_values(path)?,
            None => HashMap::new(),
        };

        let lookup = |key: &'static str| -> Option<String> {
            flags.get(key).cloned().or_else(|| file.get(key).cloned())
        };
        let require = |key: &'static str| -> Result<String, CliError> {
            lookup(key).ok_or_else(|| {
                CliError::config(format!("missing required option {key} (flag or config file)"))
            })
        };

        let mut train = TrainConfig::default();
        macro_rules! override_field {
            ($field:ident) => {
                if let Some(value) = lookup(stringify!($field)) {
                    train.$field = parse_value(stringify!($field), &value)?;
                }
            };
        }
        override_field!(learning_rate);
        override_field!(beta1);
        override_field!(beta2);
        override_field!(epsilon);
        override_field!(weight_decay);
        override_field!(batch_size);
        override_field!(dropout_rate);
        override_field!(smoothing_alpha);
        override_field!(clip_max_norm);
        override_field!(patience);
        override_field!(max_epochs);
        override_field!(threshold);

        if train.batch_size == 0 {
            return Err(CliError::config("batch_size must be at least 1"));
        }
        if train.patience == 0 {
            return Err(CliError::config("patience must be at least 1"));
        }
        if !(0.0..1.0).contains(&train.dropout_rate) {
            return Err(CliError::config("dropout_rate must be in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&train.smoothing_alpha) {
            return Err(CliError::config("smoothing_alpha must be in [0, 1]"));
        }
        if !(0.0..1.0).contains(&train.threshold) || train.threshold == 0.0 {
            return Err(CliError::config("threshold must be in (0, 1)"));
        }

        // Seeds: flags > config file > EMOCLASS_SEED > default list.
        let seeds = if !flag_seeds.is_empty() {
            flag_seeds.to_vec()
        } else if let Some(value) = file.get("seeds") {
            parse_seed_list("config file", value)?
        } else if let Ok(value) = std::env::var("EMOCLASS_SEED") {
            parse_seed_list("EMOCLASS_SEED", &value)?
        } else {
            DEFAULT_SEEDS.to_vec()
        };

        Ok(RunConfig {
            train_csv: require("train_csv")?,
            dev_csv: require("dev_csv")?,
            embeddings: require("embeddings")?,
            language: require("language")?,
            out_model: require("out_model")?,
            fingerprint: lookup("fingerprint"),
            seeds,
            train,
        })
    }
}

/// Per-seed checkpoint path: `model.txt` becomes `model.seed3.txt`.
pub fn seed_path(out_model: &str, seed: u64) -> String {
    decorate_path(out_model, &format!("seed{seed}"))
}

/// Aggregate summary path: `model.txt` becomes `model.aggregate.txt`.
pub fn aggregate_path(out_model: &str) -> String {
    decorate_path(out_model, "aggregate")
}

fn decorate_path(path: &str, tag: &str) -> String {
    let p = Path::new(path);
    match (p.file_stem().and_then(|s| s.to_str()), p.extension().and_then(|s| s.to_str())) {
        (Some(stem), Some(ext)) => p
            .with_file_name(format!("{stem}.{tag}.{ext}"))
            .to_string_lossy()
            .into_owned(),
        _ => format!("{path}.{tag}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn file_values_override_defaults_and_flags_override_file() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "# comment").unwrap();
        writeln!(file, "train_csv=a.csv").unwrap();
        writeln!(file, "dev_csv=b.csv").unwrap();
        writeln!(file, "embeddings=c.emb").unwrap();
        writeln!(file, "language=hin").unwrap();
        writeln!(file, "out_model=m.txt").unwrap();
        writeln!(file, "learning_rate=0.5").unwrap();
        writeln!(file, "seeds=7,8").unwrap();
        file.flush().unwrap();

        let mut flags = HashMap::new();
        flags.insert("learning_rate", "0.25".to_string());
        let config =
            RunConfig::resolve(Some(file.path().to_str().unwrap()), &[], &flags).unwrap();
        assert_eq!(config.train.learning_rate, 0.25);
        assert_eq!(config.train.batch_size, 16);
        assert_eq!(config.seeds, vec![7, 8]);
        assert_eq!(config.language, "hin");

        let config =
            RunConfig::resolve(Some(file.path().to_str().unwrap()), &[42], &flags).unwrap();
        assert_eq!(config.seeds, vec![42]);
    }

    #[test]
    fn missing_required_key_is_config_error() {
        let flags = HashMap::new();
        let err = RunConfig::resolve(None, &[], &flags).unwrap_err();
        assert_eq!(err.code, super::super::EXIT_CONFIG);
    }

    #[test]
    fn out_of_range_values_rejected() {
        let mut flags = HashMap::new();
        for (key, value) in [
            ("train_csv", "a"),
            ("dev_csv", "b"),
            ("embeddings", "c"),
            ("language", "x"),
            ("out_model", "m"),
        ] {
            flags.insert(key, value.to_string());
        }
        flags.insert("dropout_rate", "1.0".to_string());
        assert!(RunConfig::resolve(None, &[], &flags).is_err());
        flags.insert("dropout_rate", "0.0".to_string());
        assert!(RunConfig::resolve(None, &[], &flags).is_ok());
    }

    #[test]
    fn path_decoration() {
        assert_eq!(seed_path("out/model.txt", 3), "out/model.seed3.txt");
        assert_eq!(aggregate_path("model.txt"), "model.aggregate.txt");
        assert_eq!(seed_path("model", 0), "model.seed0");
    }
}
