use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chaindata::TxHash;
use crate::taxonomy::{load_taxonomy, IntentSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    /// Lowercase 0x-prefixed hash.
    pub tx_hash: String,
    pub gold: IntentSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DatasetError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown intent {label:?}")]
    UnknownIntent { line: usize, label: String },
    #[error("line {line}: no labels")]
    EmptyLabels { line: usize },
    #[error("line {line}: duplicate example {tx_hash}")]
    DuplicateExample { line: usize, tx_hash: String },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Line {
    tx_hash: String,
    labels: Vec<String>,
    #[serde(default)]
    note: Option<String>,
}

/// Parses JSONL with one `{tx_hash, labels, note?}` object per line. Blank
/// lines are skipped; line numbers are 1-based.
pub fn parse_dataset(text: &str) -> Result<Vec<LabeledExample>, DatasetError> {
    let taxonomy = load_taxonomy();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(raw).map_err(|e| DatasetError::Parse {
            line,
            message: e.to_string(),
        })?;
        let hash: TxHash = parsed.tx_hash.parse().map_err(|e| DatasetError::Parse {
            line,
            message: format!("{e}"),
        })?;
        if parsed.labels.is_empty() {
            return Err(DatasetError::EmptyLabels { line });
        }
        let mut gold = IntentSet::new();
        for label in &parsed.labels {
            // codes only; names are accepted from models, not from annotators
            let found = taxonomy.lookup(label.trim()).ok_or_else(|| DatasetError::UnknownIntent {
                line,
                label: label.clone(),
            })?;
            gold.insert(found.code);
        }
        let tx_hash = hash.to_string();
        if !seen.insert(tx_hash.clone()) {
            return Err(DatasetError::DuplicateExample { line, tx_hash });
        }
        out.push(LabeledExample {
            tx_hash,
            gold,
            note: parsed.note,
        });
    }
    Ok(out)
}

pub fn load_dataset(path: &Path) -> Result<Vec<LabeledExample>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|e| DatasetError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_dataset(&text)
}
