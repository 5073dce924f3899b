use serde_json::Value;

use super::{header, numbered, AgentEnv, AgentError, Answer, AnalysisReport, Candidate, PerspectiveSpec, Plan, PromptKind, Question, TxInput};
use crate::llm::{extract_json, ChatMessage, RoleKind};
use crate::taxonomy::Taxonomy;
use crate::transcript::{Recorder, Stage};

const QUESTIONS_FORMAT: &str = r#"a JSON object {"plan": {"objectives": string, "todo_items": [string], "prompts": string}, "questions": [string]}"#;
const ANSWERS_FORMAT: &str = r#"a JSON object {"answers": [string]}"#;
pub(crate) const REPORT_FORMAT: &str =
    r#"a JSON object {"narrative": string, "candidates": [{"intent": string, "justification": string, "evidence": [integer]}]}"#;

fn non_empty_str(v: &Value, key: &str) -> Result<String, String> {
    match v.get(key).and_then(Value::as_str).map(str::trim) {
        Some(s) if !s.is_empty() => Ok(s.to_string()),
        _ => Err(format!("\"{key}\" must be a non-empty string")),
    }
}

fn string_list(v: &Value, key: &str) -> Result<Vec<String>, String> {
    let items = v.get(key).and_then(Value::as_array).ok_or(format!("missing array \"{key}\""))?;
    Ok(items
        .iter()
        .filter_map(Value::as_str)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect())
}

fn parse_questions(text: &str, min: usize) -> Result<(Plan, Vec<String>), String> {
    let v = extract_json(text).ok_or("no JSON object found in the reply")?;
    let p = v.get("plan").ok_or("missing object \"plan\"")?;
    let plan = Plan {
        objectives: non_empty_str(p, "objectives")?,
        todo_items: string_list(p, "todo_items")?,
        prompts: non_empty_str(p, "prompts")?,
    };
    if plan.todo_items.is_empty() {
        return Err("\"todo_items\" must not be empty".into());
    }
    let questions = string_list(&v, "questions")?;
    if questions.len() < min {
        return Err(format!("expected at least {min} questions, got {}", questions.len()));
    }
    Ok((plan, questions))
}

/// The plan and 3 to 8 ordered questions for one perspective.
pub async fn de_generate_questions(
    env: &AgentEnv<'_>,
    perspective: &PerspectiveSpec,
    tx: TxInput<'_>,
    rec: &Recorder,
) -> Result<(Plan, Vec<Question>), AgentError> {
    let (system, user) = env.render(
        PromptKind::DeQuestions,
        &[
            ("perspective", perspective.name.clone()),
            ("rationale", perspective.rationale.clone()),
            ("prompt_seed", perspective.prompt_seed.clone()),
            ("tx_hash", tx.hash.to_string()),
            ("context", tx.context.to_string()),
            ("min_questions", env.params.min_questions.to_string()),
            ("max_questions", env.params.max_questions.to_string()),
        ],
    )?;
    let route = [("perspective", perspective.name.as_str()), ("stage", "questions")];
    let prompt = format!("{}{}\n{user}", header(&[("task", "DE")]), header(&route));
    let repair = format!("{}{}", header(&[("task", "REPAIR"), ("repair-of", "DE")]), header(&route));
    let min = env.params.min_questions;
    let (plan, mut texts) = env
        .llm
        .complete_parsed(
            rec,
            Stage::De,
            None,
            RoleKind::Creative,
            vec![ChatMessage::system(system), ChatMessage::user(prompt)],
            &repair,
            QUESTIONS_FORMAT,
            |t| parse_questions(t, min),
        )
        .await?;
    if texts.len() > env.params.max_questions {
        rec.warn(
            Stage::De,
            format!("{} questions truncated to {}", texts.len(), env.params.max_questions),
        );
        texts.truncate(env.params.max_questions);
    }
    let questions = texts
        .into_iter()
        .enumerate()
        .map(|(i, text)| Question {
            index: i + 1,
            text,
            perspective: perspective.name.clone(),
        })
        .collect();
    Ok((plan, questions))
}

/// Ablation path without solvers: the expert answers its own questions in
/// one completion, without tools.
pub async fn de_answer_directly(
    env: &AgentEnv<'_>,
    perspective: &PerspectiveSpec,
    tx: TxInput<'_>,
    questions: &[Question],
    rec: &Recorder,
) -> Result<Vec<Answer>, AgentError> {
    let texts: Vec<String> = questions.iter().map(|q| q.text.clone()).collect();
    let (system, user) = env.render(
        PromptKind::DeAnswers,
        &[
            ("perspective", perspective.name.clone()),
            ("tx_hash", tx.hash.to_string()),
            ("context", tx.context.to_string()),
            ("questions", numbered(&texts)),
        ],
    )?;
    let route = [("perspective", perspective.name.as_str()), ("stage", "answers")];
    let prompt = format!("{}{}\n{user}", header(&[("task", "DE")]), header(&route));
    let repair = format!("{}{}", header(&[("task", "REPAIR"), ("repair-of", "DE")]), header(&route));
    let mut answers = env
        .llm
        .complete_parsed(
            rec,
            Stage::De,
            None,
            RoleKind::Creative,
            vec![ChatMessage::system(system), ChatMessage::user(prompt)],
            &repair,
            ANSWERS_FORMAT,
            |t| string_list(&extract_json(t).ok_or("no JSON object found in the reply")?, "answers"),
        )
        .await?;
    if answers.len() != questions.len() {
        rec.warn(
            Stage::De,
            format!("{} answers for {} questions", answers.len(), questions.len()),
        );
        answers.resize(questions.len(), "unknown from the data".to_string());
    }
    Ok(questions
        .iter()
        .zip(answers)
        .map(|(q, text)| Answer {
            question_index: q.index,
            text,
            evidence: Vec::new(),
            iterations_used: 0,
            reasoning_only: true,
        })
        .collect())
}

/// Parses a report and filters candidates against the taxonomy. Returns
/// the report and one warning per dropped candidate.
pub fn parse_report(
    text: &str,
    perspective: &str,
    taxonomy: &Taxonomy,
    answer_count: usize,
) -> Result<(AnalysisReport, Vec<String>), String> {
    let v = extract_json(text).ok_or("no JSON object found in the reply")?;
    let narrative = v
        .get("narrative")
        .and_then(Value::as_str)
        .ok_or("missing string \"narrative\"")?
        .trim()
        .to_string();
    let items = v
        .get("candidates")
        .and_then(Value::as_array)
        .ok_or("missing array \"candidates\"")?;
    let mut warnings = Vec::new();
    let mut candidates: Vec<Candidate> = Vec::new();
    for item in items {
        let label = item
            .get("intent")
            .or_else(|| item.get("code"))
            .and_then(Value::as_str)
            .unwrap_or_default()
            .trim();
        let Ok(found) = taxonomy.parse_intent_code(label) else {
            warnings.push(format!("dropped candidate {label:?}: not in the taxonomy"));
            continue;
        };
        let justification = item
            .get("justification")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .trim()
            .to_string();
        if justification.is_empty() {
            warnings.push(format!("dropped candidate {label}: no justification"));
            continue;
        }
        if candidates.iter().any(|c| c.code == found.code) {
            continue;
        }
        let mut evidence: Vec<usize> = item
            .get("evidence")
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(Value::as_u64).map(|n| n as usize).collect())
            .unwrap_or_default();
        evidence.retain(|n| (1..=answer_count).contains(n));
        candidates.push(Candidate {
            code: found.code,
            justification,
            evidence,
        });
    }
    Ok((
        AnalysisReport {
            perspective: perspective.to_string(),
            narrative,
            candidates,
        },
        warnings,
    ))
}

/// The expert's report over its question and answer chain.
pub async fn de_compose_report(
    env: &AgentEnv<'_>,
    perspective: &PerspectiveSpec,
    tx: TxInput<'_>,
    chain: &[(Question, Answer)],
    rec: &Recorder,
) -> Result<AnalysisReport, AgentError> {
    let qa = chain
        .iter()
        .map(|(q, a)| {
            let tag = if a.reasoning_only { " (reasoning only, no retrieved evidence)" } else { "" };
            format!("{}. Q: {}\n   A{tag}: {}", q.index, q.text, a.text)
        })
        .collect::<Vec<_>>()
        .join("\n");
    let (system, user) = env.render(
        PromptKind::DeReport,
        &[
            ("perspective", perspective.name.clone()),
            ("tx_hash", tx.hash.to_string()),
            ("context", tx.context.to_string()),
            ("questions", qa),
            ("taxonomy", env.taxonomy.render_prompt_catalog()),
        ],
    )?;
    let route = [("perspective", perspective.name.as_str()), ("stage", "report")];
    let prompt = format!("{}{}\n{user}", header(&[("task", "DE")]), header(&route));
    let repair = format!("{}{}", header(&[("task", "REPAIR"), ("repair-of", "DE")]), header(&route));
    let (report, warnings) = env
        .llm
        .complete_parsed(
            rec,
            Stage::De,
            None,
            RoleKind::Creative,
            vec![ChatMessage::system(system), ChatMessage::user(prompt)],
            &repair,
            REPORT_FORMAT,
            |t| parse_report(t, &perspective.name, env.taxonomy, chain.len()),
        )
        .await?;
    for w in warnings {
        rec.warn(Stage::De, w);
    }
    Ok(report)
}
