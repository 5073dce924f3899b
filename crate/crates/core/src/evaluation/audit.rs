//! Consistency checks over published score tables: the printed F1 should
//! equal the harmonic mean of the printed recall and precision, up to
//! rounding.

use serde::Serialize;

use super::metrics::f1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrintedRow {
    pub label: &'static str,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

const fn row(label: &'static str, recall: f64, precision: f64, f1: f64) -> PrintedRow {
    PrintedRow {
        label,
        recall,
        precision,
        f1,
    }
}

/// Published per-intent scores of the full pipeline.
pub const REFERENCE_PER_INTENT: [PrintedRow; 21] = [
    row("A1", 1.00, 0.73, 0.84),
    row("A2", 0.67, 0.53, 0.59),
    row("A3", 0.82, 0.73, 0.77),
    row("A4", 0.60, 0.56, 0.58),
    row("A5", 0.53, 0.55, 0.54),
    row("A6", 0.85, 0.60, 0.70),
    row("A7", 0.72, 0.68, 0.70),
    row("A8", 0.57, 0.52, 0.54),
    row("A9", 0.88, 0.90, 0.89),
    row("A10", 0.56, 0.72, 0.29),
    row("A11", 0.30, 0.28, 0.29),
    row("A12", 0.55, 0.60, 0.57),
    row("A13", 0.92, 0.80, 0.86),
    row("A14", 1.00, 0.52, 0.68),
    row("A15", 0.82, 0.74, 0.78),
    row("A16", 0.53, 0.43, 0.47),
    row("A17", 0.42, 0.45, 0.43),
    row("A18", 1.00, 1.00, 1.00),
    row("A19", 0.67, 0.33, 0.44),
    row("A20", 1.00, 1.00, 1.00),
    row("A21", 0.50, 0.50, 0.50),
];

/// Published method comparison: machine-learning baselines, single-model
/// setups, ablations and the full pipeline under several models.
pub const REFERENCE_METHODS: [PrintedRow; 18] = [
    row("Naive Bayes", 0.76, 0.36, 0.49),
    row("SVM", 0.59, 0.50, 0.54),
    row("Decision Tree", 0.65, 0.44, 0.52),
    row("XGBoost", 0.68, 0.55, 0.61),
    row("CNN+sigmoid", 0.62, 0.58, 0.62),
    row("Single LLM", 0.33, 0.28, 0.30),
    row("Single Agent", 0.38, 0.45, 0.41),
    row("w/o MP", 0.62, 0.65, 0.63),
    row("w/o DE", 0.40, 0.48, 0.44),
    row("w/o QS", 0.32, 0.30, 0.31),
    row("w/o CE", 0.72, 0.45, 0.55),
    row("full", 0.78, 0.72, 0.75),
    row("w/ grok-3-mini", 0.72, 0.70, 0.71),
    row("w/ grok-3", 0.80, 0.69, 0.74),
    row("w/ gpt-4o-mini", 0.73, 0.69, 0.71),
    row("w/ gpt-4o", 0.77, 0.68, 0.72),
    row("w/ qwen3-30b", 0.69, 0.67, 0.66),
    row("w/ LangGPT", 0.75, 0.71, 0.73),
];

pub const AUDIT_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditFinding {
    pub label: &'static str,
    pub printed_f1: f64,
    pub recomputed_f1: f64,
    pub consistent: bool,
}

pub fn audit_rows(rows: &[PrintedRow], tolerance: f64) -> Vec<AuditFinding> {
    rows.iter()
        .map(|r| {
            let recomputed = f1(r.precision, r.recall);
            AuditFinding {
                label: r.label,
                printed_f1: r.f1,
                recomputed_f1: recomputed,
                consistent: (recomputed - r.f1).abs() <= tolerance,
            }
        })
        .collect()
}

/// Labels whose printed F1 cannot come from their printed recall and
/// precision.
pub fn inconsistent_labels(rows: &[PrintedRow], tolerance: f64) -> Vec<&'static str> {
    audit_rows(rows, tolerance)
        .into_iter()
        .filter(|f| !f.consistent)
        .map(|f| f.label)
        .collect()
}
