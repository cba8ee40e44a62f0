//! Multi-label evaluation: per-label confusion counts, precision/recall/F1,
//! micro and macro aggregation, report tables, multi-seed statistics, and
//! leaderboard gap comparison.
//!
//! Zero-denominator cases score 0 by convention and are flagged in the
//! report's warnings; micro aggregation is global over all (sample, label)
//! pairs, never batch-averaged.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::datasets::{EmotionLabel, LabelSchema};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("language {0:?} missing from reference")]
    MissingLanguage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad file: {0}")]
    Format(String),
}

/// Confusion counts for one label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct LabelCounts {
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub true_neg: usize,
}

impl LabelCounts {
    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }

    /// Gold positives for this label.
    pub fn support(&self) -> usize {
        self.true_pos + self.false_neg
    }
}

/// Per-label confusion counts over a full evaluation set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub per_label: Vec<LabelCounts>,
    pub samples: usize,
}

/// Tally per-label counts over all samples. `preds` and `golds` are N x L
/// binary matrices with matching shapes.
pub fn confusion(preds: &[Vec<u8>], golds: &[Vec<u8>]) -> Result<ConfusionCounts, MetricsError> {
    if preds.len() != golds.len() {
        return Err(MetricsError::ShapeMismatch(format!(
            "{} predictions vs {} golds",
            preds.len(),
            golds.len()
        )));
    }
    let label_count = preds.first().map_or_else(|| golds.first().map_or(0, Vec::len), Vec::len);
    let mut per_label = vec![LabelCounts::default(); label_count];
    for (row, (pred, gold)) in preds.iter().zip(golds.iter()).enumerate() {
        if pred.len() != label_count || gold.len() != label_count {
            return Err(MetricsError::ShapeMismatch(format!(
                "row {row}: expected {label_count} labels, got pred {} / gold {}",
                pred.len(),
                gold.len()
            )));
        }
        for (counts, (&p, &g)) in per_label.iter_mut().zip(pred.iter().zip(gold.iter())) {
            match (p, g) {
                (1, 1) => counts.true_pos += 1,
                (1, 0) => counts.false_pos += 1,
                (0, 1) => counts.false_neg += 1,
                _ => counts.true_neg += 1,
            }
        }
    }
    Ok(ConfusionCounts {
        per_label,
        samples: preds.len(),
    })
}

/// Precision, recall, and F1 for one label. Any 0/0 scores 0.
pub fn prf1(counts: &LabelCounts) -> (f64, f64, f64) {
    let tp = counts.true_pos as f64;
    let precision = if counts.true_pos + counts.false_pos == 0 {
        0.0
    } else {
        tp / (counts.true_pos + counts.false_pos) as f64
    };
    let recall = if counts.true_pos + counts.false_neg == 0 {
        0.0
    } else {
        tp / (counts.true_pos + counts.false_neg) as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (precision, recall, f1)
}

/// Mean of per-label F1 over all labels, including zero-scoring ones.
pub fn macro_f1(counts: &ConfusionCounts) -> f64 {
    if counts.per_label.is_empty() {
        return 0.0;
    }
    let sum: f64 = counts.per_label.iter().map(|c| prf1(c).2).sum();
    sum / counts.per_label.len() as f64
}

/// F1 of the counts summed over all labels.
pub fn micro_f1(counts: &ConfusionCounts) -> f64 {
    let mut summed = LabelCounts::default();
    for c in &counts.per_label {
        summed.true_pos += c.true_pos;
        summed.false_pos += c.false_pos;
        summed.false_neg += c.false_neg;
        summed.true_neg += c.true_neg;
    }
    prf1(&summed).2
}

/// Full evaluation of a prediction matrix against gold labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub language: String,
    pub labels: Vec<String>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    /// Gold positives per label.
    pub support: Vec<usize>,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub samples: usize,
    /// Labels where a zero denominator forced the score-0 convention.
    pub warnings: Vec<String>,
}

/// Compute a per-label report plus micro/macro summaries.
pub fn classification_report(
    preds: &[Vec<u8>],
    golds: &[Vec<u8>],
    schema: &LabelSchema,
) -> Result<EvalReport, MetricsError> {
    let counts = confusion(preds, golds)?;
    if counts.per_label.len() != schema.len() && counts.samples > 0 {
        return Err(MetricsError::ShapeMismatch(format!(
            "matrix has {} labels, schema has {}",
            counts.per_label.len(),
            schema.len()
        )));
    }
    let mut precision = Vec::with_capacity(schema.len());
    let mut recall = Vec::with_capacity(schema.len());
    let mut f1 = Vec::with_capacity(schema.len());
    let mut support = Vec::with_capacity(schema.len());
    let mut warnings = Vec::new();
    for (label, c) in schema.labels().iter().zip(counts.per_label.iter()) {
        let (p, r, s) = prf1(c);
        if c.true_pos + c.false_pos == 0 || c.true_pos + c.false_neg == 0 {
            warnings.push(format!(
                "{}: zero denominator, precision/recall/F1 scored 0 by convention",
                label.name()
            ));
        }
        precision.push(p);
        recall.push(r);
        f1.push(s);
        support.push(c.support());
    }
    Ok(EvalReport {
        language: schema.language().to_string(),
        labels: schema.label_names(),
        precision,
        recall,
        f1,
        support,
        micro_f1: micro_f1(&counts),
        macro_f1: macro_f1(&counts),
        samples: counts.samples,
        warnings,
    })
}

impl EvalReport {
    /// Per-label detail table plus micro/macro summary lines.
    pub fn render_detail(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} {:>10} {:>10} {:>10} {:>9}",
            "label", "precision", "recall", "f1", "support"
        );
        for (i, label) in self.labels.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:<10} {:>10.4} {:>10.4} {:>10.4} {:>9}",
                label, self.precision[i], self.recall[i], self.f1[i], self.support[i]
            );
        }
        let _ = writeln!(out, "{:<10} {:>10.4}", "micro_f1", self.micro_f1);
        let _ = writeln!(out, "{:<10} {:>10.4}", "macro_f1", self.macro_f1);
        let _ = writeln!(out, "{:<10} {:>10}", "samples", self.samples);
        for warning in &self.warnings {
            let _ = writeln!(out, "warning: {warning}");
        }
        out
    }

    /// Project onto the six canonical emotion columns for the score table.
    pub fn score_row(&self) -> ScoreRow {
        let mut per_emotion = [None; 6];
        for (i, name) in self.labels.iter().enumerate() {
            if let Some(label) = EmotionLabel::from_name(name) {
                per_emotion[label as usize] = Some(self.f1[i]);
            }
        }
        ScoreRow {
            language: self.language.clone(),
            per_emotion,
            micro: self.micro_f1,
            macro_: self.macro_f1,
        }
    }
}

/// One row of the per-language score table: emotion-level F1 in canonical
/// column order (None renders as an en dash), then micro and macro F1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreRow {
    pub language: String,
    pub per_emotion: [Option<f64>; 6],
    pub micro: f64,
    pub macro_: f64,
}

const ABSENT_CELL: &str = "\u{2013}";

/// Render rows as an aligned table: one emotion-level F1 column per canonical
/// emotion, then the overall micro and macro columns, at 4 decimal places.
pub fn render_score_table(rows: &[ScoreRow]) -> String {
    let lang_width = rows
        .iter()
        .map(|r| r.language.chars().count())
        .chain(std::iter::once("Language".len()))
        .max()
        .unwrap_or(8);
    let mut out = String::new();
    let _ = write!(out, "{:<lang_width$}", "Language");
    for label in EmotionLabel::ALL {
        let _ = write!(out, " {:>8}", label.display_name());
    }
    let _ = writeln!(out, " {:>8} {:>8}", "Micro", "Macro");
    for row in rows {
        let _ = write!(out, "{:<lang_width$}", row.language);
        for cell in &row.per_emotion {
            match cell {
                Some(score) => {
                    let _ = write!(out, " {score:>8.4}");
                }
                None => {
                    let _ = write!(out, " {ABSENT_CELL:>8}");
                }
            }
        }
        let _ = writeln!(out, " {:>8.4} {:>8.4}", row.micro, row.macro_);
    }
    out
}

/// Parse a stored score table: tab-separated lines of
/// `language  anger  disgust  fear  joy  sadness  surprise  micro  macro`,
/// with `-` or an en dash marking an absent emotion. `#` starts a comment.
pub fn load_score_rows(path: impl AsRef<Path>) -> Result<Vec<ScoreRow>, MetricsError> {
    let content = fs::read_to_string(path.as_ref())?;
    let mut rows = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 9 {
            return Err(MetricsError::Format(format!(
                "line {}: expected 9 tab-separated fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let parse = |s: &str| -> Result<f64, MetricsError> {
            s.parse()
                .map_err(|_| MetricsError::Format(format!("line {}: bad score {s:?}", lineno + 1)))
        };
        let mut per_emotion = [None; 6];
        for (i, field) in fields[1..7].iter().enumerate() {
            if *field != "-" && *field != ABSENT_CELL {
                per_emotion[i] = Some(parse(field)?);
            }
        }
        rows.push(ScoreRow {
            language: fields[0].to_string(),
            per_emotion,
            micro: parse(fields[7])?,
            macro_: parse(fields[8])?,
        });
    }
    Ok(rows)
}

/// Mean and population standard deviation of report metrics across seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedAggregate {
    pub labels: Vec<String>,
    pub runs: usize,
    pub f1_mean: Vec<f64>,
    pub f1_std: Vec<f64>,
    pub micro_mean: f64,
    pub micro_std: f64,
    pub macro_mean: f64,
    pub macro_std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Aggregate reports from runs that differ only in seed.
pub fn aggregate_seeds(reports: &[EvalReport]) -> Result<SeedAggregate, MetricsError> {
    let Some(first) = reports.first() else {
        return Err(MetricsError::SchemaMismatch("no reports to aggregate".into()));
    };
    for report in reports {
        if report.labels != first.labels {
            return Err(MetricsError::SchemaMismatch(format!(
                "labels {:?} vs {:?}",
                report.labels, first.labels
            )));
        }
    }
    let mut f1_mean = Vec::with_capacity(first.labels.len());
    let mut f1_std = Vec::with_capacity(first.labels.len());
    for i in 0..first.labels.len() {
        let column: Vec<f64> = reports.iter().map(|r| r.f1[i]).collect();
        let (m, s) = mean_std(&column);
        f1_mean.push(m);
        f1_std.push(s);
    }
    let micros: Vec<f64> = reports.iter().map(|r| r.micro_f1).collect();
    let macros: Vec<f64> = reports.iter().map(|r| r.macro_f1).collect();
    let (micro_mean, micro_std) = mean_std(&micros);
    let (macro_mean, macro_std) = mean_std(&macros);
    Ok(SeedAggregate {
        labels: first.labels.clone(),
        runs: reports.len(),
        f1_mean,
        f1_std,
        micro_mean,
        micro_std,
        macro_mean,
        macro_std,
    })
}

impl SeedAggregate {
    /// Flat key=value rendering, stable across runs.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "runs={}", self.runs);
        let _ = writeln!(out, "macro_f1.mean={}", self.macro_mean);
        let _ = writeln!(out, "macro_f1.std={}", self.macro_std);
        let _ = writeln!(out, "micro_f1.mean={}", self.micro_mean);
        let _ = writeln!(out, "micro_f1.std={}", self.micro_std);
        for (i, label) in self.labels.iter().enumerate() {
            let _ = writeln!(out, "f1.{label}.mean={}", self.f1_mean[i]);
            let _ = writeln!(out, "f1.{label}.std={}", self.f1_std[i]);
        }
        out
    }
}

/// A reference leaderboard row: the two top-ranked teams for one language.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeaderboardEntry {
    pub language: String,
    pub first_team: String,
    pub first_score: f64,
    pub second_team: String,
    pub second_score: f64,
}

/// Parse a leaderboard reference file: tab-separated lines of
/// `language  first_team  first_score  second_team  second_score`.
pub fn load_leaderboard(path: impl AsRef<Path>) -> Result<Vec<LeaderboardEntry>, MetricsError> {
    let content = fs::read_to_string(path.as_ref())?;
    let mut entries = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(MetricsError::Format(format!(
                "line {}: expected 5 tab-separated fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let parse = |s: &str| -> Result<f64, MetricsError> {
            s.parse()
                .map_err(|_| MetricsError::Format(format!("line {}: bad score {s:?}", lineno + 1)))
        };
        entries.push(LeaderboardEntry {
            language: fields[0].to_string(),
            first_team: fields[1].to_string(),
            first_score: parse(fields[2])?,
            second_team: fields[3].to_string(),
            second_score: parse(fields[4])?,
        });
    }
    Ok(entries)
}

/// Per-language gap between our macro F1 and the two top-ranked scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeaderboardGap {
    pub language: String,
    pub ours: f64,
    pub first_team: String,
    pub first_score: f64,
    pub gap_to_first: f64,
    pub second_team: String,
    pub second_score: f64,
    pub gap_to_second: f64,
}

/// Compare our per-language macro F1 against a reference leaderboard.
/// Every language in `ours` must appear in the reference.
pub fn leaderboard_compare(
    ours: &[(String, f64)],
    reference: &[LeaderboardEntry],
) -> Result<Vec<LeaderboardGap>, MetricsError> {
    let mut gaps = Vec::with_capacity(ours.len());
    for (language, score) in ours {
        let entry = reference
            .iter()
            .find(|e| &e.language == language)
            .ok_or_else(|| MetricsError::MissingLanguage(language.clone()))?;
        gaps.push(LeaderboardGap {
            language: language.clone(),
            ours: *score,
            first_team: entry.first_team.clone(),
            first_score: entry.first_score,
            gap_to_first: entry.first_score - score,
            second_team: entry.second_team.clone(),
            second_score: entry.second_score,
            gap_to_second: entry.second_score - score,
        });
    }
    Ok(gaps)
}

/// Render gaps as an aligned table at 4 decimal places.
pub fn render_gap_table(gaps: &[LeaderboardGap]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>8} {:>16} {:>8} {:>8} {:>16} {:>8} {:>8}",
        "Language", "Ours", "1st Team", "Score", "Gap", "2nd Team", "Score", "Gap"
    );
    for gap in gaps {
        let _ = writeln!(
            out,
            "{:<10} {:>8.4} {:>16} {:>8.4} {:>8.4} {:>16} {:>8.4} {:>8.4}",
            gap.language,
            gap.ours,
            gap.first_team,
            gap.first_score,
            gap.gap_to_first,
            gap.second_team,
            gap.second_score,
            gap.gap_to_second
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::EmotionLabel;
    use proptest::prelude::*;

    fn schema2() -> LabelSchema {
        LabelSchema::new("xx", vec![EmotionLabel::Anger, EmotionLabel::Joy]).unwrap()
    }

    #[test]
    fn perfect_predictions_have_no_errors() {
        let golds = vec![vec![1, 0], vec![0, 1], vec![1, 1]];
        let counts = confusion(&golds, &golds).unwrap();
        for c in &counts.per_label {
            assert_eq!(c.false_pos, 0);
            assert_eq!(c.false_neg, 0);
        }
        assert_eq!(micro_f1(&counts), 1.0);
        assert_eq!(macro_f1(&counts), 1.0);
    }

    #[test]
    fn complement_predictions_have_no_hits() {
        let golds = vec![vec![1, 0], vec![0, 1]];
        let preds = vec![vec![0, 1], vec![1, 0]];
        let counts = confusion(&preds, &golds).unwrap();
        for c in &counts.per_label {
            assert_eq!(c.true_pos, 0);
            assert_eq!(c.true_neg, 0);
        }
    }

    #[test]
    fn confusion_matches_hand_tally() {
        // 3 samples x 2 labels, tallied by hand over every (pred, gold) pair.
        let preds = vec![vec![1, 0], vec![1, 1], vec![0, 0]];
        let golds = vec![vec![1, 1], vec![0, 1], vec![0, 0]];
        let counts = confusion(&preds, &golds).unwrap();
        assert_eq!(
            counts.per_label[0],
            LabelCounts { true_pos: 1, false_pos: 1, false_neg: 0, true_neg: 1 }
        );
        assert_eq!(
            counts.per_label[1],
            LabelCounts { true_pos: 1, false_pos: 0, false_neg: 1, true_neg: 1 }
        );
        assert_eq!(counts.per_label[0].total(), 3);
    }

    #[test]
    fn prf1_hand_values() {
        let (p, r, f) = prf1(&LabelCounts { true_pos: 1, false_pos: 1, false_neg: 0, true_neg: 0 });
        assert_eq!(p, 0.5);
        assert_eq!(r, 1.0);
        assert!((f - 2.0 / 3.0).abs() < 1e-15);

        let (p, r, f) = prf1(&LabelCounts::default());
        assert_eq!((p, r, f), (0.0, 0.0, 0.0));

        let (_, _, f) = prf1(&LabelCounts { true_pos: 5, false_pos: 0, false_neg: 0, true_neg: 0 });
        assert_eq!(f, 1.0);
    }

    #[test]
    fn macro_micro_hand_values() {
        // Label 0: tp=1 fp=1 fn=0 -> F1 = 2/3. Label 1: no hits -> F1 = 0.
        let counts = ConfusionCounts {
            per_label: vec![
                LabelCounts { true_pos: 1, false_pos: 1, false_neg: 0, true_neg: 0 },
                LabelCounts { true_pos: 0, false_pos: 0, false_neg: 1, true_neg: 1 },
            ],
            samples: 2,
        };
        assert!((macro_f1(&counts) - 1.0 / 3.0).abs() < 1e-15);
        // Summed: tp=1, fp=1, fn=1 -> P = R = 0.5 -> micro = 0.5.
        assert_eq!(micro_f1(&counts), 0.5);
    }

    #[test]
    fn report_flags_zero_division_labels() {
        let schema = schema2();
        let preds = vec![vec![0, 1]];
        let golds = vec![vec![0, 1]];
        let report = classification_report(&preds, &golds, &schema).unwrap();
        assert_eq!(report.f1[1], 1.0);
        assert_eq!(report.f1[0], 0.0);
        assert!(report.warnings.iter().any(|w| w.starts_with("anger")));
    }

    #[test]
    fn shape_mismatch_detected() {
        let preds = vec![vec![0, 1], vec![1]];
        let golds = vec![vec![0, 1], vec![1, 0]];
        assert!(matches!(
            confusion(&preds, &golds),
            Err(MetricsError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn score_table_renders_reference_values() {
        let rows = vec![
            ScoreRow {
                language: "hin".into(),
                per_emotion: [
                    Some(0.8665),
                    Some(0.8718),
                    Some(0.9072),
                    Some(0.8992),
                    Some(0.8815),
                    Some(0.9147),
                ],
                micro: 0.8903,
                macro_: 0.8901,
            },
            ScoreRow {
                language: "eng".into(),
                per_emotion: [
                    Some(0.6483),
                    None,
                    Some(0.8235),
                    Some(0.7325),
                    Some(0.7473),
                    Some(0.7182),
                ],
                micro: 0.7603,
                macro_: 0.7340,
            },
        ];
        let table = render_score_table(&rows);
        let hin_line = table.lines().find(|l| l.starts_with("hin")).unwrap();
        assert!(hin_line.contains("0.8903"));
        assert!(hin_line.ends_with("0.8901"));
        let eng_line = table.lines().find(|l| l.starts_with("eng")).unwrap();
        assert!(eng_line.contains(ABSENT_CELL));
    }

    #[test]
    fn aggregate_identical_reports_has_zero_std() {
        let schema = schema2();
        let preds = vec![vec![1, 0]];
        let report = classification_report(&preds, &preds.clone(), &schema).unwrap();
        let agg = aggregate_seeds(&vec![report.clone(); 5]).unwrap();
        assert_eq!(agg.runs, 5);
        assert_eq!(agg.macro_std, 0.0);
        assert_eq!(agg.micro_std, 0.0);
        assert_eq!(agg.macro_mean, report.macro_f1);
    }

    #[test]
    fn aggregate_known_spread() {
        let schema = schema2();
        let base = classification_report(&[vec![1, 0]], &[vec![1, 0]], &schema).unwrap();
        let reports: Vec<EvalReport> = [0.5, 0.6, 0.7, 0.8, 0.9]
            .iter()
            .map(|&m| {
                let mut r = base.clone();
                r.macro_f1 = m;
                r
            })
            .collect();
        let agg = aggregate_seeds(&reports).unwrap();
        assert!((agg.macro_mean - 0.7).abs() < 1e-12);
        assert!((agg.macro_std - 0.02f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn aggregate_single_report_zero_std() {
        let schema = schema2();
        let report = classification_report(&[vec![1, 1]], &[vec![1, 1]], &schema).unwrap();
        let agg = aggregate_seeds(std::slice::from_ref(&report)).unwrap();
        assert_eq!(agg.macro_mean, report.macro_f1);
        assert_eq!(agg.macro_std, 0.0);
    }

    #[test]
    fn aggregate_rejects_mixed_schemas() {
        let a = classification_report(&[vec![1, 1]], &[vec![1, 1]], &schema2()).unwrap();
        let other = LabelSchema::new("xx", vec![EmotionLabel::Fear, EmotionLabel::Joy]).unwrap();
        let b = classification_report(&[vec![1, 1]], &[vec![1, 1]], &other).unwrap();
        assert!(matches!(
            aggregate_seeds(&[a, b]),
            Err(MetricsError::SchemaMismatch(_))
        ));
        assert!(aggregate_seeds(&[]).is_err());
    }

    #[test]
    fn leaderboard_gaps() {
        let reference = vec![
            LeaderboardEntry {
                language: "hin".into(),
                first_team: "JNLP".into(),
                first_score: 0.9257,
                second_team: "PAI".into(),
                second_score: 0.9197,
            },
            LeaderboardEntry {
                language: "rus".into(),
                first_team: "PA-oneteam-1".into(),
                first_score: 0.9087,
                second_team: "Heimerdinger".into(),
                second_score: 0.9008,
            },
        ];
        let ours = vec![("hin".to_string(), 0.8901), ("rus".to_string(), 0.8831)];
        let gaps = leaderboard_compare(&ours, &reference).unwrap();
        assert!((gaps[0].gap_to_first - 0.0356).abs() < 1e-12);
        assert!((gaps[1].gap_to_second - 0.0177).abs() < 1e-12);

        let equal = vec![("hin".to_string(), 0.9257)];
        let gaps = leaderboard_compare(&equal, &reference).unwrap();
        assert_eq!(gaps[0].gap_to_first, 0.0);

        let missing = vec![("deu".to_string(), 0.5)];
        assert!(matches!(
            leaderboard_compare(&missing, &reference),
            Err(MetricsError::MissingLanguage(_))
        ));
    }

    /// Brute-force tally used as the independent oracle: walks every
    /// (sample, label) pair and recomputes F1 from first principles.
    fn brute_force_micro_macro(preds: &[Vec<u8>], golds: &[Vec<u8>]) -> (f64, f64) {
        let labels = golds[0].len();
        let mut per_label_f1 = Vec::with_capacity(labels);
        let (mut tp_all, mut fp_all, mut fn_all) = (0usize, 0usize, 0usize);
        for l in 0..labels {
            let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
            for (p, g) in preds.iter().zip(golds.iter()) {
                match (p[l], g[l]) {
                    (1, 1) => tp += 1,
                    (1, 0) => fp += 1,
                    (0, 1) => fn_ += 1,
                    _ => {}
                }
            }
            tp_all += tp;
            fp_all += fp;
            fn_all += fn_;
            let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
            let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            per_label_f1.push(f1);
        }
        let macro_score = per_label_f1.iter().sum::<f64>() / labels as f64;
        let precision = if tp_all + fp_all == 0 {
            0.0
        } else {
            tp_all as f64 / (tp_all + fp_all) as f64
        };
        let recall = if tp_all + fn_all == 0 {
            0.0
        } else {
            tp_all as f64 / (tp_all + fn_all) as f64
        };
        let micro_score = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        (micro_score, macro_score)
    }

    #[test]
    fn exhaustive_oracle_small_matrices() {
        // Every prediction matrix for every shape up to N=3, L=2, against
        // every possible gold matrix of the same shape.
        for n in 1usize..=3 {
            for l in 1usize..=2 {
                let cells = n * l;
                for gold_bits in 0u32..(1 << cells) {
                    let golds: Vec<Vec<u8>> = (0..n)
                        .map(|i| (0..l).map(|j| ((gold_bits >> (i * l + j)) & 1) as u8).collect())
                        .collect();
                    for bits in 0u32..(1 << cells) {
                        let preds: Vec<Vec<u8>> = (0..n)
                            .map(|i| (0..l).map(|j| ((bits >> (i * l + j)) & 1) as u8).collect())
                            .collect();
                        let counts = confusion(&preds, &golds).unwrap();
                        let (micro_expected, macro_expected) =
                            brute_force_micro_macro(&preds, &golds);
                        assert_eq!(micro_f1(&counts), micro_expected, "n={n} l={l} bits={bits}");
                        assert_eq!(macro_f1(&counts), macro_expected, "n={n} l={l} bits={bits}");
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn sample_order_permutation_invariant(seed in 0u64..300) {
            let mut rng = crate::rng::SplitMix64::new(seed);
            let n = 2 + rng.next_below(8);
            let l = 1 + rng.next_below(4);
            let draw = |rng: &mut crate::rng::SplitMix64| -> Vec<Vec<u8>> {
                (0..n).map(|_| (0..l).map(|_| rng.next_below(2) as u8).collect()).collect()
            };
            let preds = draw(&mut rng);
            let golds = draw(&mut rng);
            let counts = confusion(&preds, &golds).unwrap();

            let mut order: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut order);
            let preds_p: Vec<Vec<u8>> = order.iter().map(|&i| preds[i].clone()).collect();
            let golds_p: Vec<Vec<u8>> = order.iter().map(|&i| golds[i].clone()).collect();
            let counts_p = confusion(&preds_p, &golds_p).unwrap();

            prop_assert_eq!(micro_f1(&counts), micro_f1(&counts_p));
            prop_assert_eq!(macro_f1(&counts), macro_f1(&counts_p));
        }

        #[test]
        fn macro_label_permutation_invariant(seed in 0u64..300) {
            let mut rng = crate::rng::SplitMix64::new(seed);
            let n = 1 + rng.next_below(6);
            let l = 2 + rng.next_below(4);
            let draw = |rng: &mut crate::rng::SplitMix64| -> Vec<Vec<u8>> {
                (0..n).map(|_| (0..l).map(|_| rng.next_below(2) as u8).collect()).collect()
            };
            let preds = draw(&mut rng);
            let golds = draw(&mut rng);

            let mut order: Vec<usize> = (0..l).collect();
            rng.shuffle(&mut order);
            let permute = |m: &[Vec<u8>]| -> Vec<Vec<u8>> {
                m.iter().map(|row| order.iter().map(|&j| row[j]).collect()).collect()
            };
            let a = macro_f1(&confusion(&preds, &golds).unwrap());
            let b = macro_f1(&confusion(&permute(&preds), &permute(&golds)).unwrap());
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn metrics_stay_in_unit_interval(seed in 0u64..300) {
            let mut rng = crate::rng::SplitMix64::new(seed);
            let n = 1 + rng.next_below(10);
            let l = 1 + rng.next_below(5);
            let draw = |rng: &mut crate::rng::SplitMix64| -> Vec<Vec<u8>> {
                (0..n).map(|_| (0..l).map(|_| rng.next_below(2) as u8).collect()).collect()
            };
            let preds = draw(&mut rng);
            let golds = draw(&mut rng);
            let counts = confusion(&preds, &golds).unwrap();
            for c in &counts.per_label {
                let (p, r, f) = prf1(c);
                prop_assert!((0.0..=1.0).contains(&p));
                prop_assert!((0.0..=1.0).contains(&r));
                prop_assert!((0.0..=1.0).contains(&f));
                prop_assert_eq!(c.total(), n);
            }
            prop_assert!((0.0..=1.0).contains(&micro_f1(&counts)));
            prop_assert!((0.0..=1.0).contains(&macro_f1(&counts)));
        }
    }
}
