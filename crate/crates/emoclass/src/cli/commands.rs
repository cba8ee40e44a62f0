//! Subcommand implementations. Results print to standard output; every error
//! is mapped onto the stable exit codes in the parent module.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::baselines::{
    fit_multioutput, load_baseline, predict_dict, save_baseline, BaselineError, LearnerKind,
    LogRegHyper,
};
use crate::datasets::{infer_schema, load_dataset, sample_key, Dataset, Split};
use crate::embeddings::{
    embed_remote, load_store, save_store, Backend, EmbedderConfig, EmbeddingStore, HashingEmbedder,
    RemoteEmbedder, TextEmbedder,
};
use crate::head::{
    load_model, predict as head_predict, save_model, train_head, EmbeddedSplit, HeadError,
    TrainedModel,
};
use crate::metrics::{
    aggregate_seeds, classification_report, leaderboard_compare, load_leaderboard,
    load_score_rows, render_gap_table, render_score_table, EvalReport,
};

use super::config::{aggregate_path, seed_path, RunConfig};
use super::{
    BaselineFitArgs, BaselinePredictArgs, CliError, EmbedHashArgs, EmbedRemoteArgs, EvalArgs,
    PredictArgs, ReportLeaderboardArgs, ReportScoresArgs, TrainArgs,
};

fn require_file(path: &str, role: &str) -> Result<(), CliError> {
    if !Path::new(path).is_file() {
        return Err(CliError::config(format!("{role} not found: {path}")));
    }
    Ok(())
}

fn parse_split(value: &str) -> Result<Split, CliError> {
    Split::parse(value)
        .ok_or_else(|| CliError::config(format!("bad split {value:?}, expected train|dev|test")))
}

fn head_error(e: HeadError) -> CliError {
    match e {
        HeadError::MissingEmbedding(key) => {
            CliError::missing_embeddings(format!("embeddings file is missing key {key:?}"))
        }
        HeadError::Config(message) => CliError::config(message),
        other => CliError::data(other.to_string()),
    }
}

fn baseline_error(e: BaselineError) -> CliError {
    CliError::data(e.to_string())
}

/// Read a corpus CSV, inferring its schema from the header.
fn load_corpus(path: &str, language: &str, split: Split) -> Result<Dataset, CliError> {
    require_file(path, "corpus CSV")?;
    let file = fs::File::open(path)
        .map_err(|e| CliError::config(format!("cannot open {path}: {e}")))?;
    let mut reader = csv::Reader::from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::data(format!("{path}: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let schema =
        infer_schema(&header, language).map_err(|e| CliError::data(format!("{path}: {e}")))?;
    load_dataset(path, &schema, split).map_err(|e| CliError::data(format!("{path}: {e}")))
}

fn precomputed_fingerprint(dim: usize) -> String {
    EmbedderConfig::precomputed(dim)
        .map(|c| c.fingerprint())
        .unwrap_or_else(|_| format!("precomputed:dim={dim}"))
}

fn load_store_checked(path: &str) -> Result<EmbeddingStore, CliError> {
    require_file(path, "embeddings store")?;
    load_store(path).map_err(|e| CliError::data(format!("{path}: {e}")))
}

/// Fresh store, or the existing one when appending.
fn open_output_store(path: &str, dim: usize, append: bool) -> Result<EmbeddingStore, CliError> {
    if append && Path::new(path).is_file() {
        let store = load_store_checked(path)?;
        if store.dim() != dim {
            return Err(CliError::data(format!(
                "cannot append dim={dim} vectors to store {path} with dim={}",
                store.dim()
            )));
        }
        Ok(store)
    } else {
        Ok(EmbeddingStore::new(dim))
    }
}

pub fn embed_hash(args: &EmbedHashArgs) -> Result<(), CliError> {
    let split = parse_split(&args.split)?;
    let dataset = load_corpus(&args.input, &args.language, split)?;
    let config = EmbedderConfig::hashing(args.dim, args.seed)
        .and_then(|c| c.with_max_tokens(args.max_tokens))
        .map_err(|e| CliError::config(e.to_string()))?;
    let embedder = HashingEmbedder::new(config).map_err(|e| CliError::config(e.to_string()))?;

    let mut store = open_output_store(&args.out, args.dim, args.append)?;
    for (index, sample) in dataset.samples.iter().enumerate() {
        let vector = embedder
            .embed(&sample.text)
            .map_err(|e| CliError::data(format!("row {index}: {e}")))?;
        store
            .insert(sample_key(split, index), vector)
            .map_err(|e| CliError::data(e.to_string()))?;
    }
    save_store(&store, &args.out).map_err(|e| CliError::data(e.to_string()))?;
    println!(
        "{}: {} vectors (dim={}, fingerprint={})",
        args.out,
        store.len(),
        args.dim,
        embedder.fingerprint(),
    );
    Ok(())
}

pub fn embed_remote_cmd(args: &EmbedRemoteArgs) -> Result<(), CliError> {
    let split = parse_split(&args.split)?;
    let dataset = load_corpus(&args.input, &args.language, split)?;
    let config = EmbedderConfig::remote(args.endpoint.clone(), args.dim)
        .and_then(|c| c.with_max_tokens(args.max_tokens))
        .map_err(|e| CliError::config(e.to_string()))?;
    if args.batch_size == 0 {
        return Err(CliError::config("batch-size must be at least 1"));
    }

    let texts: Vec<String> = dataset.samples.iter().map(|s| s.text.clone()).collect();
    let mut store = open_output_store(&args.out, args.dim, args.append)?;
    let mut index = 0usize;
    for chunk in texts.chunks(args.batch_size) {
        let vectors = embed_remote(chunk, &config).map_err(|e| CliError::data(e.to_string()))?;
        for vector in vectors {
            store
                .insert(sample_key(split, index), vector)
                .map_err(|e| CliError::data(e.to_string()))?;
            index += 1;
        }
    }
    save_store(&store, &args.out).map_err(|e| CliError::data(e.to_string()))?;
    println!(
        "{}: {} vectors (dim={}, fingerprint={})",
        args.out,
        store.len(),
        args.dim,
        config.fingerprint(),
    );
    Ok(())
}

fn train_flag_map(args: &TrainArgs) -> HashMap<&'static str, String> {
    let mut flags = HashMap::new();
    let mut set = |key: &'static str, value: Option<String>| {
        if let Some(value) = value {
            flags.insert(key, value);
        }
    };
    set("train_csv", args.train_csv.clone());
    set("dev_csv", args.dev_csv.clone());
    set("embeddings", args.embeddings.clone());
    set("language", args.language.clone());
    set("out_model", args.out_model.clone());
    set("learning_rate", args.learning_rate.map(|v| v.to_string()));
    set("weight_decay", args.weight_decay.map(|v| v.to_string()));
    set("batch_size", args.batch_size.map(|v| v.to_string()));
    set("dropout_rate", args.dropout_rate.map(|v| v.to_string()));
    set("smoothing_alpha", args.smoothing_alpha.map(|v| v.to_string()));
    set("clip_max_norm", args.clip_max_norm.map(|v| v.to_string()));
    set("patience", args.patience.map(|v| v.to_string()));
    set("max_epochs", args.max_epochs.map(|v| v.to_string()));
    set("threshold", args.threshold.map(|v| v.to_string()));
    set("fingerprint", args.fingerprint.clone());
    flags
}

fn dev_report(
    model: &TrainedModel,
    dev: &EmbeddedSplit,
    threshold: f64,
) -> Result<EvalReport, CliError> {
    let preds = crate::head::predictions_for_split(model, dev, threshold).map_err(head_error)?;
    classification_report(&preds, &dev.ys, &dev.schema).map_err(|e| CliError::data(e.to_string()))
}

pub fn train(args: &TrainArgs) -> Result<(), CliError> {
    let flags = train_flag_map(args);
    let run = RunConfig::resolve(args.config.as_deref(), &args.seed, &flags)?;

    require_file(&run.train_csv, "train CSV")?;
    require_file(&run.dev_csv, "dev CSV")?;
    let train_set = load_corpus(&run.train_csv, &run.language, Split::Train)?;
    let dev_set = load_corpus(&run.dev_csv, &run.language, Split::Dev)?;
    if train_set.schema != dev_set.schema {
        return Err(CliError::data(format!(
            "train and dev schemas differ: {:?} vs {:?}",
            train_set.schema.label_names(),
            dev_set.schema.label_names()
        )));
    }
    let store = load_store_checked(&run.embeddings)?;
    let fingerprint = run
        .fingerprint
        .clone()
        .unwrap_or_else(|| precomputed_fingerprint(store.dim()));
    let train_split = EmbeddedSplit::from_store(&train_set, &store).map_err(head_error)?;
    let dev_split = EmbeddedSplit::from_store(&dev_set, &store).map_err(head_error)?;

    let mut reports = Vec::with_capacity(run.seeds.len());
    for &seed in &run.seeds {
        let mut config = run.train.clone();
        config.seed = seed;
        let model =
            train_head(&train_split, &dev_split, &config, &fingerprint).map_err(head_error)?;
        let path = seed_path(&run.out_model, seed);
        save_model(&model, &path).map_err(head_error)?;
        let report = dev_report(&model, &dev_split, model.threshold)?;
        println!(
            "seed {seed}: best epoch {} of {}, dev macro F1 {:.4}, checkpoint {path}",
            model.best_epoch,
            model.history.len(),
            report.macro_f1,
        );
        reports.push(report);
    }

    let aggregate = aggregate_seeds(&reports).map_err(|e| CliError::data(e.to_string()))?;
    let summary_path = aggregate_path(&run.out_model);
    fs::write(&summary_path, aggregate.render())
        .map_err(|e| CliError::data(format!("cannot write {summary_path}: {e}")))?;
    println!(
        "aggregate over {} seeds: dev macro F1 {:.4} +/- {:.4} ({summary_path})",
        aggregate.runs, aggregate.macro_mean, aggregate.macro_std
    );
    Ok(())
}

fn load_model_checked(path: &str) -> Result<TrainedModel, CliError> {
    require_file(path, "model checkpoint")?;
    load_model(path).map_err(|e| CliError::data(format!("{path}: {e}")))
}

pub fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let model = load_model_checked(&args.model)?;
    let split = parse_split(&args.split)?;
    let test_set = load_corpus(&args.test_csv, model.schema.language(), split)?;
    if test_set.schema != model.schema {
        return Err(CliError::data(format!(
            "schema mismatch: test file has labels {:?}, model expects {:?}",
            test_set.schema.label_names(),
            model.schema.label_names()
        )));
    }
    let store = load_store_checked(&args.embeddings)?;
    let test_split = EmbeddedSplit::from_store(&test_set, &store).map_err(head_error)?;
    let threshold = args.threshold.unwrap_or(model.threshold);
    let preds =
        crate::head::predictions_for_split(&model, &test_split, threshold).map_err(head_error)?;
    let report = classification_report(&preds, &test_split.ys, &model.schema)
        .map_err(|e| CliError::data(e.to_string()))?;

    let table = render_score_table(&[report.score_row()]);
    match args.format.as_str() {
        "table" => {
            print!("{table}");
            print!("{}", report.render_detail());
        }
        "json-like" => {
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::data(e.to_string()))?;
            println!("{json}");
        }
        other => return Err(CliError::config(format!("unknown format {other:?}"))),
    }
    if let Some(out) = &args.out {
        fs::write(out, &table)
            .map_err(|e| CliError::data(format!("cannot write {out}: {e}")))?;
    }
    Ok(())
}

/// Build the text embedder a checkpoint was trained with. Remote models need
/// the endpoint again (it is not part of the fingerprint); precomputed-store
/// models cannot embed new text at all.
fn embedder_from_fingerprint(
    fingerprint: &str,
    endpoint: Option<&str>,
) -> Result<Box<dyn TextEmbedder>, CliError> {
    let mut config = EmbedderConfig::from_fingerprint(fingerprint)
        .map_err(|e| CliError::data(format!("bad model fingerprint: {e}")))?;
    match config.backend {
        Backend::Hashing => Ok(Box::new(
            HashingEmbedder::new(config).map_err(|e| CliError::data(e.to_string()))?,
        )),
        Backend::Remote => {
            let endpoint = endpoint.ok_or_else(|| {
                CliError::config(
                    "model was trained on remote embeddings; pass --endpoint to embed new text",
                )
            })?;
            config.endpoint = Some(endpoint.to_string());
            Ok(Box::new(
                RemoteEmbedder::new(config).map_err(|e| CliError::config(e.to_string()))?,
            ))
        }
        Backend::Precomputed => Err(CliError::config(
            "model was trained on a precomputed store; it cannot embed new text",
        )),
    }
}

pub fn predict(args: &PredictArgs) -> Result<(), CliError> {
    let model = load_model_checked(&args.model)?;
    if args.text.trim().is_empty() {
        return Err(CliError::data("text is empty"));
    }
    let embedder = embedder_from_fingerprint(&model.embedder_fingerprint, args.endpoint.as_deref())?;
    let vector = embedder
        .embed(&args.text)
        .map_err(|e| CliError::data(e.to_string()))?;
    let threshold = args.threshold.unwrap_or(model.threshold);
    let (probs, decisions) =
        head_predict(&model, &vector, threshold).map_err(head_error)?;
    for ((label, p), d) in model
        .schema
        .label_names()
        .into_iter()
        .zip(probs.iter())
        .zip(decisions.iter())
    {
        println!("{label}\t{p:.4}\t{d}");
    }
    Ok(())
}

pub fn baseline_fit(args: &BaselineFitArgs) -> Result<(), CliError> {
    let kind = LearnerKind::parse(&args.kind)
        .ok_or_else(|| CliError::config(format!("bad kind {:?}, expected logreg|gnb", args.kind)))?;
    let split = parse_split(&args.split)?;
    let dataset = load_corpus(&args.train_csv, &args.language, split)?;
    let labels = dataset.labels_matrix();

    let (embeddings, fingerprint) = match &args.embeddings {
        Some(path) => {
            let store = load_store_checked(path)?;
            let mut rows = Vec::with_capacity(dataset.len());
            for index in 0..dataset.len() {
                let key = sample_key(split, index);
                let vector = store.get(&key).ok_or_else(|| {
                    CliError::missing_embeddings(format!(
                        "embeddings file is missing key {key:?}"
                    ))
                })?;
                rows.push(vector.clone());
            }
            (rows, precomputed_fingerprint(store.dim()))
        }
        None => {
            let config = EmbedderConfig::hashing(args.dim, args.seed)
                .and_then(|c| c.with_max_tokens(args.max_tokens))
                .map_err(|e| CliError::config(e.to_string()))?;
            let embedder =
                HashingEmbedder::new(config).map_err(|e| CliError::config(e.to_string()))?;
            let mut rows = Vec::with_capacity(dataset.len());
            for (index, sample) in dataset.samples.iter().enumerate() {
                rows.push(
                    embedder
                        .embed(&sample.text)
                        .map_err(|e| CliError::data(format!("row {index}: {e}")))?,
                );
            }
            (rows, embedder.fingerprint())
        }
    };

    let hyper = LogRegHyper {
        l2_penalty: args.l2_penalty,
        max_iter: args.max_iter,
        tol: args.tol,
        ..LogRegHyper::default()
    };
    let model = fit_multioutput(kind, &embeddings, &labels, &dataset.schema, &fingerprint, &hyper)
        .map_err(baseline_error)?;
    save_baseline(&model, &args.out_model).map_err(baseline_error)?;
    println!(
        "fitted {} baseline over {} samples, checkpoint {}",
        kind.as_str(),
        dataset.len(),
        args.out_model
    );
    Ok(())
}

pub fn baseline_predict(args: &BaselinePredictArgs) -> Result<(), CliError> {
    require_file(&args.model, "baseline checkpoint")?;
    let model =
        load_baseline(&args.model).map_err(|e| CliError::data(format!("{}: {e}", args.model)))?;
    if args.text.trim().is_empty() {
        return Err(CliError::data("text is empty"));
    }
    let embedder =
        embedder_from_fingerprint(&model.embedder_fingerprint, args.endpoint.as_deref())?;
    let dict = predict_dict(&model, &args.text, embedder.as_ref()).map_err(baseline_error)?;
    for (label, decision) in &dict {
        println!("{label}\t{decision}");
    }
    Ok(())
}

pub fn report_scores(args: &ReportScoresArgs) -> Result<(), CliError> {
    require_file(&args.scores, "scores file")?;
    let rows = load_score_rows(&args.scores).map_err(|e| CliError::data(e.to_string()))?;
    match args.format.as_str() {
        "table" => print!("{}", render_score_table(&rows)),
        "json-like" => {
            let json =
                serde_json::to_string_pretty(&rows).map_err(|e| CliError::data(e.to_string()))?;
            println!("{json}");
        }
        other => return Err(CliError::config(format!("unknown format {other:?}"))),
    }
    Ok(())
}

pub fn report_leaderboard(args: &ReportLeaderboardArgs) -> Result<(), CliError> {
    require_file(&args.scores, "scores file")?;
    require_file(&args.reference, "reference file")?;
    let rows = load_score_rows(&args.scores).map_err(|e| CliError::data(e.to_string()))?;
    let reference = load_leaderboard(&args.reference).map_err(|e| CliError::data(e.to_string()))?;
    let ours: Vec<(String, f64)> = rows
        .iter()
        .map(|r| (r.language.clone(), r.macro_))
        .collect();
    let gaps = leaderboard_compare(&ours, &reference).map_err(|e| CliError::data(e.to_string()))?;
    match args.format.as_str() {
        "table" => print!("{}", render_gap_table(&gaps)),
        "json-like" => {
            let json =
                serde_json::to_string_pretty(&gaps).map_err(|e| CliError::data(e.to_string()))?;
            println!("{json}");
        }
        other => return Err(CliError::config(format!("unknown format {other:?}"))),
    }
    Ok(())
}
