//! Model-agnostic evaluation: confusion matrices, per-class and averaged F1,
//! per-discipline breakdowns, and error-breakdown analysis. Predictions from
//! any classifier (including external deep models) plug in through the
//! predictions file format: `example_id<TAB>LABEL` per line.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::{CueLabel, Discipline, Error, Result};

/// 3x3 confusion counts indexed `[gold][predicted]` in fixed label order
/// (Guided, Directed, None).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn from_labels(gold: &[CueLabel], pred: &[CueLabel]) -> Result<ConfusionMatrix> {
        if gold.len() != pred.len() {
            return Err(Error::validation(format!(
                "gold has {} labels but predictions have {}",
                gold.len(),
                pred.len()
            )));
        }
        if gold.is_empty() {
            return Err(Error::validation("cannot evaluate zero examples"));
        }
        let mut counts = [[0u64; 3]; 3];
        for (&g, &p) in gold.iter().zip(pred.iter()) {
            counts[g.index()][p.index()] += 1;
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, label: CueLabel) -> u64 {
        self.counts[label.index()].iter().sum()
    }

    pub fn col_sum(&self, label: CueLabel) -> u64 {
        self.counts.iter().map(|row| row[label.index()]).sum()
    }

    pub fn diagonal(&self) -> u64 {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.diagonal() as f64 / self.total() as f64
    }
}

/// Free-function form of [`ConfusionMatrix::from_labels`].
pub fn confusion(gold: &[CueLabel], pred: &[CueLabel]) -> Result<ConfusionMatrix> {
    ConfusionMatrix::from_labels(gold, pred)
}

/// Precision/recall/F1 for one class. A zero denominator reports 0; a class
/// absent from both gold and predictions is flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub label: CueLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold examples of this class.
    pub support: u64,
    pub absent: bool,
}

/// Per-class precision, recall, and F1 from a confusion matrix.
pub fn per_class_prf(matrix: &ConfusionMatrix) -> [ClassScores; 3] {
    CueLabel::ALL.map(|label| {
        let i = label.index();
        let tp = matrix.counts[i][i];
        let row = matrix.row_sum(label);
        let col = matrix.col_sum(label);
        let precision = if col == 0 {
            0.0
        } else {
            tp as f64 / col as f64
        };
        let recall = if row == 0 {
            0.0
        } else {
            tp as f64 / row as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassScores {
            label,
            precision,
            recall,
            f1,
            support: row,
            absent: row == 0 && col == 0,
        }
    })
}

/// How per-class F1 scores are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AverageMode {
    Macro,
    Micro,
    Weighted,
}

impl AverageMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AverageMode::Macro => "macro",
            AverageMode::Micro => "micro",
            AverageMode::Weighted => "weighted",
        }
    }
}

impl core::fmt::Display for AverageMode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AverageMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "macro" => Ok(AverageMode::Macro),
            "micro" => Ok(AverageMode::Micro),
            "weighted" => Ok(AverageMode::Weighted),
            other => Err(Error::validation(format!(
                "unknown averaging mode {other:?} (expected macro, micro, or weighted)"
            ))),
        }
    }
}

/// Averaged F1: macro is the unweighted mean of per-class F1, weighted is
/// the gold-support-weighted mean, micro pools TP/FP/FN (and equals accuracy
/// for single-label multi-class data).
pub fn averaged_f1(matrix: &ConfusionMatrix, mode: AverageMode) -> f64 {
    let per_class = per_class_prf(matrix);
    match mode {
        AverageMode::Macro => per_class.iter().map(|c| c.f1).sum::<f64>() / 3.0,
        AverageMode::Weighted => {
            let total = matrix.total() as f64;
            per_class
                .iter()
                .map(|c| c.f1 * c.support as f64 / total)
                .sum()
        }
        AverageMode::Micro => {
            let tp = matrix.diagonal() as f64;
            let fp = (matrix.total() - matrix.diagonal()) as f64;
            let fne = fp; // every single-label error is one FP and one FN
            if tp == 0.0 && fp == 0.0 && fne == 0.0 {
                return 0.0;
            }
            2.0 * tp / (2.0 * tp + fp + fne)
        }
    }
}

/// A full evaluation over one label set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub n: u64,
    pub matrix: ConfusionMatrix,
    pub per_class: [ClassScores; 3],
    pub averaged_f1: f64,
    pub averaging_mode: AverageMode,
}

pub fn evaluate_labels(
    gold: &[CueLabel],
    pred: &[CueLabel],
    mode: AverageMode,
) -> Result<EvalResult> {
    let matrix = ConfusionMatrix::from_labels(gold, pred)?;
    Ok(EvalResult {
        n: matrix.total(),
        matrix,
        per_class: per_class_prf(&matrix),
        averaged_f1: averaged_f1(&matrix, mode),
        averaging_mode: mode,
    })
}

/// One row of the per-discipline table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisciplineRow {
    pub discipline: Discipline,
    pub f1: f64,
    pub n: u64,
}

/// Per-discipline F1 plus the unweighted mean over disciplines and the
/// pooled score over all examples (both are reported because table averages
/// can legitimately be built either way).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisciplineTable {
    pub rows: Vec<DisciplineRow>,
    /// Unweighted mean of the per-discipline scores.
    pub average: f64,
    /// Score over all examples pooled.
    pub pooled: f64,
    pub averaging_mode: AverageMode,
}

/// Scores predictions against a gold corpus, one row per discipline present
/// plus an average row. Every gold example must have a prediction.
pub fn evaluate_by_discipline(
    gold: &Corpus,
    predictions: &BTreeMap<String, CueLabel>,
    mode: AverageMode,
) -> Result<DisciplineTable> {
    let missing: Vec<&str> = gold
        .examples
        .iter()
        .filter(|e| !predictions.contains_key(&e.example_id))
        .map(|e| e.example_id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::validation(format!(
            "missing predictions for {} example(s): {}",
            missing.len(),
            missing.join(", ")
        )));
    }
    if gold.examples.is_empty() {
        return Err(Error::validation("cannot evaluate an empty corpus"));
    }

    let mut rows = Vec::new();
    let mut pooled_gold = Vec::new();
    let mut pooled_pred = Vec::new();
    for discipline in Discipline::ALL {
        let mut gold_labels = Vec::new();
        let mut pred_labels = Vec::new();
        for example in gold.examples.iter().filter(|e| e.discipline == discipline) {
            gold_labels.push(example.label);
            pred_labels.push(predictions[&example.example_id]);
        }
        pooled_gold.extend(&gold_labels);
        pooled_pred.extend(&pred_labels);
        if gold_labels.is_empty() {
            continue;
        }
        let matrix = ConfusionMatrix::from_labels(&gold_labels, &pred_labels)?;
        rows.push(DisciplineRow {
            discipline,
            f1: averaged_f1(&matrix, mode),
            n: matrix.total(),
        });
    }
    let average = rows.iter().map(|r| r.f1).sum::<f64>() / rows.len() as f64;
    let pooled_matrix = ConfusionMatrix::from_labels(&pooled_gold, &pooled_pred)?;
    Ok(DisciplineTable {
        rows,
        average,
        pooled: averaged_f1(&pooled_matrix, mode),
        averaging_mode: mode,
    })
}

/// Errors counted from both directions: per gold class and per predicted
/// class. The two vectors always share the same sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBreakdown {
    pub mislabeled_per_gold_class: [u64; 3],
    pub wrong_predictions_per_predicted_class: [u64; 3],
}

pub fn error_breakdown(gold: &[CueLabel], pred: &[CueLabel]) -> Result<ErrorBreakdown> {
    if gold.len() != pred.len() {
        return Err(Error::validation(format!(
            "gold has {} labels but predictions have {}",
            gold.len(),
            pred.len()
        )));
    }
    let mut per_gold = [0u64; 3];
    let mut per_pred = [0u64; 3];
    for (&g, &p) in gold.iter().zip(pred.iter()) {
        if g != p {
            per_gold[g.index()] += 1;
            per_pred[p.index()] += 1;
        }
    }
    Ok(ErrorBreakdown {
        mislabeled_per_gold_class: per_gold,
        wrong_predictions_per_predicted_class: per_pred,
    })
}

/// Parses a predictions file into (example_id, label) pairs in file order.
/// Duplicate ids are rejected.
pub fn load_predictions(content: &str) -> Result<Vec<(String, CueLabel)>> {
    let mut out: Vec<(String, CueLabel)> = Vec::new();
    for (no, line) in content.lines().enumerate() {
        let line_no = no + 1;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::parse(
                line_no,
                format!("expected 2 tab-separated fields, found {}", fields.len()),
            ));
        }
        let label =
            CueLabel::from_str(fields[1]).map_err(|e| Error::parse(line_no, format!("{e}")))?;
        if out.iter().any(|(id, _)| id == fields[0]) {
            return Err(Error::parse(
                line_no,
                format!("duplicate example_id {:?}", fields[0]),
            ));
        }
        out.push((fields[0].to_string(), label));
    }
    Ok(out)
}

/// Predictions as a map keyed by example id.
pub fn predictions_to_map(predictions: Vec<(String, CueLabel)>) -> BTreeMap<String, CueLabel> {
    predictions.into_iter().collect()
}

/// Renders predictions into file form.
pub fn render_predictions(predictions: &[(String, CueLabel)]) -> String {
    let mut out = String::new();
    for (id, label) in predictions {
        out.push_str(&format!("{id}\t{label}\n"));
    }
    out
}

/// The structured metrics report written by the evaluate command. Field
/// names are fixed; label-indexed arrays follow `label_order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub label_order: [CueLabel; 3],
    pub n: u64,
    pub confusion_matrix: ConfusionMatrix,
    pub per_class: [ClassScores; 3],
    pub averaged_f1: f64,
    pub averaging_mode: AverageMode,
    pub error_breakdown: ErrorBreakdown,
    pub by_discipline: Option<DisciplineTable>,
}

/// Builds the full metrics report for a gold corpus and prediction map.
pub fn metrics_report(
    gold: &Corpus,
    predictions: &BTreeMap<String, CueLabel>,
    mode: AverageMode,
    by_discipline: bool,
) -> Result<MetricsReport> {
    let missing: Vec<&str> = gold
        .examples
        .iter()
        .filter(|e| !predictions.contains_key(&e.example_id))
        .map(|e| e.example_id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::validation(format!(
            "missing predictions for {} example(s): {}",
            missing.len(),
            missing.join(", ")
        )));
    }
    let gold_labels: Vec<CueLabel> = gold.examples.iter().map(|e| e.label).collect();
    let pred_labels: Vec<CueLabel> = gold
        .examples
        .iter()
        .map(|e| predictions[&e.example_id])
        .collect();
    let result = evaluate_labels(&gold_labels, &pred_labels, mode)?;
    Ok(MetricsReport {
        label_order: CueLabel::ALL,
        n: result.n,
        confusion_matrix: result.matrix,
        per_class: result.per_class,
        averaged_f1: result.averaged_f1,
        averaging_mode: mode,
        error_breakdown: error_breakdown(&gold_labels, &pred_labels)?,
        by_discipline: by_discipline
            .then(|| evaluate_by_discipline(gold, predictions, mode))
            .transpose()?,
    })
}
