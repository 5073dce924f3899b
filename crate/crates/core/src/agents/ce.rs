use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value;

use super::{header, AgentEnv, AgentError, AnalysisReport, PromptKind, RankedEntry, RankedIntents, TxInput, Verdict};
use crate::llm::{extract_json, ChatMessage, RoleKind};
use crate::taxonomy::{IntentCode, Taxonomy};
use crate::transcript::{Recorder, Stage};

const FORMAT: &str =
    r#"a JSON object {"scores": [{"intent": string, "verifiability": number, "relevance": number, "reason": string}]}"#;

#[derive(Debug, Clone, PartialEq)]
pub struct Score {
    pub code: IntentCode,
    pub verifiability: f64,
    pub relevance: f64,
    pub reason: String,
}

fn clamp_unit(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

/// Orders by combined score (the mean of both dimensions) descending, then
/// code ascending, and applies the threshold. Scores for codes outside
/// `candidates` are ignored; candidates without a score get zeros. When
/// nothing passes, the top entry is accepted as "forced-best".
pub fn rank_scores(candidates: &BTreeSet<IntentCode>, scores: &[Score], threshold: f64) -> (RankedIntents, Vec<String>) {
    let mut warnings = Vec::new();
    let mut by_code: BTreeMap<IntentCode, &Score> = BTreeMap::new();
    for s in scores {
        if !candidates.contains(&s.code) {
            warnings.push(format!("ignored score for {}: no expert proposed it", s.code));
        } else if by_code.insert(s.code, s).is_some() {
            warnings.push(format!("duplicate score for {}; the last one wins", s.code));
        }
    }
    let mut entries: Vec<RankedEntry> = candidates
        .iter()
        .map(|code| {
            let (v, r, reason) = match by_code.get(code) {
                Some(s) => {
                    let (v, r) = (clamp_unit(s.verifiability), clamp_unit(s.relevance));
                    if v != s.verifiability || r != s.relevance {
                        warnings.push(format!("scores for {code} clamped to [0, 1]"));
                    }
                    (v, r, s.reason.clone())
                }
                None => {
                    warnings.push(format!("{code} was not scored by the evaluator"));
                    (0.0, 0.0, "not scored by the evaluator".to_string())
                }
            };
            let combined = (v + r) / 2.0;
            RankedEntry {
                code: *code,
                verifiability: v,
                relevance: r,
                combined,
                verdict: if combined >= threshold { Verdict::Accepted } else { Verdict::Rejected },
                reason,
            }
        })
        .collect();
    entries.sort_by(|a, b| b.combined.total_cmp(&a.combined).then(a.code.cmp(&b.code)));
    if !entries.is_empty() && entries.iter().all(|e| e.verdict == Verdict::Rejected) {
        let top = &mut entries[0];
        top.verdict = Verdict::Accepted;
        top.reason = format!("forced-best: {}", top.reason);
    }
    (RankedIntents { entries }, warnings)
}

fn number(item: &Value, key: &str) -> Result<f64, String> {
    match item.get(key) {
        Some(Value::Number(n)) => n.as_f64().ok_or_else(|| format!("\"{key}\" is not a finite number")),
        Some(Value::String(s)) => s.trim().parse().map_err(|_| format!("\"{key}\" is not a number")),
        _ => Err(format!("missing number \"{key}\"")),
    }
}

/// Scores with labels outside the taxonomy dropped, plus one warning each.
pub fn parse_scores(text: &str, taxonomy: &Taxonomy) -> Result<(Vec<Score>, Vec<String>), String> {
    let v = extract_json(text).ok_or("no JSON object found in the reply")?;
    let items = v.get("scores").and_then(Value::as_array).ok_or("missing array \"scores\"")?;
    let mut scores = Vec::new();
    let mut warnings = Vec::new();
    for item in items {
        let label = item
            .get("intent")
            .or_else(|| item.get("code"))
            .and_then(Value::as_str)
            .unwrap_or_default();
        let Ok(found) = taxonomy.parse_intent_code(label) else {
            warnings.push(format!("dropped score for {label:?}: not in the taxonomy"));
            continue;
        };
        scores.push(Score {
            code: found.code,
            verifiability: number(item, "verifiability")?,
            relevance: number(item, "relevance")?,
            reason: item
                .get("reason")
                .and_then(Value::as_str)
                .unwrap_or_default()
                .trim()
                .to_string(),
        });
    }
    Ok((scores, warnings))
}

pub fn candidate_union(reports: &[AnalysisReport]) -> BTreeSet<IntentCode> {
    reports.iter().flat_map(|r| r.candidates.iter().map(|c| c.code)).collect()
}

fn render_reports(reports: &[AnalysisReport], taxonomy: &Taxonomy) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&format!("## {}\nNarrative: {}\nCandidates:\n", r.perspective, r.narrative));
        if r.candidates.is_empty() {
            out.push_str("- none\n");
        }
        for c in &r.candidates {
            let cites = if c.evidence.is_empty() {
                String::new()
            } else {
                format!(
                    " [answers {}]",
                    c.evidence.iter().map(usize::to_string).collect::<Vec<_>>().join(", ")
                )
            };
            out.push_str(&format!("- {}: {}{cites}\n", taxonomy.label(c.code), c.justification));
        }
        out.push('\n');
    }
    out.trim_end().to_string()
}

/// Scores every distinct candidate across `reports` and ranks them.
pub async fn ce_evaluate(
    env: &AgentEnv<'_>,
    tx: TxInput<'_>,
    reports: &[AnalysisReport],
    rec: &Recorder,
) -> Result<RankedIntents, AgentError> {
    let candidates = candidate_union(reports);
    if candidates.is_empty() {
        return Err(AgentError::NoCandidates);
    }
    let listed = candidates.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(", ");
    let (system, user) = env.render(
        PromptKind::CeEvaluate,
        &[
            ("tx_hash", tx.hash.to_string()),
            ("context", tx.context.to_string()),
            ("reports", render_reports(reports, env.taxonomy)),
            ("candidates", listed),
            ("taxonomy", env.taxonomy.render_prompt_catalog()),
            ("threshold", env.params.ce_threshold.to_string()),
        ],
    )?;
    let prompt = format!("{}\n{user}", header(&[("task", "CE"), ("stage", "evaluate")]));
    let repair = header(&[("task", "REPAIR"), ("repair-of", "CE"), ("stage", "evaluate")]);
    let (scores, mut warnings) = env
        .llm
        .complete_parsed(
            rec,
            Stage::Ce,
            None,
            RoleKind::Executive,
            vec![ChatMessage::system(system), ChatMessage::user(prompt)],
            &repair,
            FORMAT,
            |t| parse_scores(t, env.taxonomy),
        )
        .await?;
    let (ranked, more) = rank_scores(&candidates, &scores, env.params.ce_threshold);
    warnings.extend(more);
    for w in warnings {
        rec.warn(Stage::Ce, w);
    }
    Ok(ranked)
}

/// Ablation path without the evaluator: every candidate is accepted,
/// ranked by how many perspectives proposed it, then by code.
pub fn aggregate_without_verification(reports: &[AnalysisReport]) -> RankedIntents {
    let n = reports.len().max(1) as f64;
    let mut support: BTreeMap<IntentCode, usize> = BTreeMap::new();
    for r in reports {
        for c in &r.candidates {
            *support.entry(c.code).or_default() += 1;
        }
    }
    let mut entries: Vec<RankedEntry> = support
        .into_iter()
        .map(|(code, k)| {
            let share = k as f64 / n;
            RankedEntry {
                code,
                verifiability: share,
                relevance: share,
                combined: share,
                verdict: Verdict::Accepted,
                reason: format!("aggregated without verification ({k} of {} perspectives)", reports.len()),
            }
        })
        .collect();
    entries.sort_by(|a, b| b.combined.total_cmp(&a.combined).then(a.code.cmp(&b.code)));
    RankedIntents { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::Candidate;
    use IntentCode::*;

    fn score(code: IntentCode, v: f64, r: f64) -> Score {
        Score {
            code,
            verifiability: v,
            relevance: r,
            reason: "r".into(),
        }
    }

    #[test]
    fn threshold_splits() {
        let c = BTreeSet::from([A9, A1]);
        let (ranked, _) = rank_scores(&c, &[score(A9, 0.9, 0.9), score(A1, 0.2, 0.3)], 0.5);
        assert_eq!(ranked.entries[0].code, A9);
        assert_eq!(ranked.entries[0].verdict, Verdict::Accepted);
        assert_eq!(ranked.entries[1].verdict, Verdict::Rejected);
    }

    #[test]
    fn ties_go_to_lower_code() {
        let c = BTreeSet::from([A3, A1]);
        let (ranked, _) = rank_scores(&c, &[score(A3, 0.6, 0.6), score(A1, 0.7, 0.5)], 0.5);
        assert_eq!(ranked.entries[0].code, A1);
    }

    #[test]
    fn forced_best_when_all_rejected() {
        let c = BTreeSet::from([A3, A4]);
        let (ranked, _) = rank_scores(&c, &[score(A3, 0.4, 0.5), score(A4, 0.1, 0.1)], 0.5);
        assert_eq!(ranked.accepted().len(), 1);
        assert!(ranked.entries[0].reason.starts_with("forced-best"));
    }

    #[test]
    fn unscored_and_out_of_range() {
        let c = BTreeSet::from([A5, A9]);
        let (ranked, warnings) = rank_scores(&c, &[score(A9, 1.7, -1.0), score(A2, 1.0, 1.0)], 0.5);
        let a9 = ranked.entries.iter().find(|e| e.code == A9).unwrap();
        assert_eq!((a9.verifiability, a9.relevance), (1.0, 0.0));
        let a5 = ranked.entries.iter().find(|e| e.code == A5).unwrap();
        assert_eq!(a5.combined, 0.0);
        assert!(!ranked.entries.iter().any(|e| e.code == A2));
        assert_eq!(warnings.len(), 3);
    }

    #[test]
    fn aggregation_counts_support() {
        let report = |name: &str, codes: &[IntentCode]| AnalysisReport {
            perspective: name.into(),
            narrative: String::new(),
            candidates: codes
                .iter()
                .map(|c| Candidate {
                    code: *c,
                    justification: "j".into(),
                    evidence: vec![],
                })
                .collect(),
        };
        let ranked = aggregate_without_verification(&[report("a", &[A9, A5]), report("b", &[A5, A1])]);
        let order: Vec<IntentCode> = ranked.entries.iter().map(|e| e.code).collect();
        assert_eq!(order, vec![A5, A1, A9]);
        assert!(ranked.entries.iter().all(|e| e.verdict == Verdict::Accepted));
    }

    #[test]
    fn hallucinated_labels_dropped() {
        let text = r#"{"scores": [{"intent": "A9", "verifiability": 0.8, "relevance": 0.9},
            {"intent": "A22", "verifiability": 0.9, "relevance": 0.9},
            {"intent": "Wash Trading", "verifiability": 0.9, "relevance": 0.9}]}"#;
        let (scores, warnings) = parse_scores(text, crate::taxonomy::load_taxonomy()).unwrap();
        assert_eq!(scores.len(), 1);
        assert_eq!(warnings.len(), 2);
    }
}
