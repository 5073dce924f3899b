use serde::{Deserialize, Serialize};

use crate::agents::{AnalysisReport, RankedIntents, Verdict};
use crate::taxonomy::{load_taxonomy, IntentSet};
use crate::transcript::Cost;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerspectiveFailure {
    pub perspective: String,
    pub message: String,
}

/// The output of one run. Field order here is the field order in
/// report.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalIntentReport {
    pub tx_hash: String,
    pub accepted: IntentSet,
    pub ranked: RankedIntents,
    pub perspectives: Vec<AnalysisReport>,
    pub explanation: String,
    pub cost: Cost,
    /// Perspectives that failed while the rest carried on.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<PerspectiveFailure>,
}

impl FinalIntentReport {
    pub fn assemble(
        tx_hash: String,
        ranked: RankedIntents,
        perspectives: Vec<AnalysisReport>,
        failures: Vec<PerspectiveFailure>,
    ) -> Self {
        Self {
            accepted: ranked.accepted(),
            explanation: build_explanation(&ranked, &perspectives, &failures),
            tx_hash,
            ranked,
            perspectives,
            cost: Cost::default(),
            failures,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}

/// Evaluator verdicts first, since they were formed last and over all the
/// evidence, then each perspective's narrative in plan order.
pub fn build_explanation(
    ranked: &RankedIntents,
    perspectives: &[AnalysisReport],
    failures: &[PerspectiveFailure],
) -> String {
    let taxonomy = load_taxonomy();
    let mut lines = Vec::new();
    for (verdict, title) in [(Verdict::Accepted, "Accepted intents:"), (Verdict::Rejected, "Rejected candidates:")] {
        let entries: Vec<_> = ranked.entries.iter().filter(|e| e.verdict == verdict).collect();
        if entries.is_empty() {
            continue;
        }
        lines.push(title.to_string());
        for e in entries {
            let label = taxonomy.label(e.code);
            lines.push(format!(
                "- {} {} (combined {:.2}): {}",
                e.code, label.name, e.combined, e.reason
            ));
        }
    }
    if !perspectives.is_empty() {
        lines.push("Perspectives:".into());
        for p in perspectives {
            lines.push(format!("- {}: {}", p.perspective, p.narrative));
        }
    }
    if !failures.is_empty() {
        lines.push("Failed perspectives:".into());
        for f in failures {
            lines.push(format!("- {}: {}", f.perspective, f.message));
        }
    }
    lines.join("\n")
}
