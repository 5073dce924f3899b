use serde_json::Value;

use super::{header, AgentEnv, AgentError, PerspectiveSpec, PromptKind, TxInput};
use crate::llm::{extract_json, ChatMessage, RoleKind};
use crate::transcript::{Event, Recorder, Stage};

const FORMAT: &str = r#"a JSON object {"perspectives": [{"name": string, "rationale": string, "prompt_seed": string}]}"#;

/// Parses a plan reply. Duplicate and empty names are dropped; the cap is
/// applied by the caller.
pub fn parse_plan(text: &str) -> Result<Vec<PerspectiveSpec>, String> {
    let v = extract_json(text).ok_or("no JSON object found in the reply")?;
    let items = v
        .get("perspectives")
        .and_then(Value::as_array)
        .ok_or("missing array \"perspectives\"")?;
    let mut out: Vec<PerspectiveSpec> = Vec::new();
    for item in items {
        let (name, rationale, seed) = match item {
            Value::String(s) => (s.trim().to_string(), String::new(), String::new()),
            Value::Object(o) => {
                let get = |k: &str| o.get(k).and_then(Value::as_str).unwrap_or_default().trim().to_string();
                (get("name"), get("rationale"), get("prompt_seed"))
            }
            _ => return Err("perspective entries must be objects".into()),
        };
        if name.is_empty() || out.iter().any(|p| p.name.eq_ignore_ascii_case(&name)) {
            continue;
        }
        out.push(PerspectiveSpec {
            rationale: if rationale.is_empty() { format!("{name} was proposed by the planner.") } else { rationale },
            prompt_seed: if seed.is_empty() { format!("Analyse the transaction from the {name} angle.") } else { seed },
            name,
        });
    }
    Ok(out)
}

/// Plans 2 to `max_perspectives` perspectives. A plan with fewer than two
/// gets one retry; a second degenerate plan falls back to the canonical trio.
pub async fn mp_plan(env: &AgentEnv<'_>, tx: TxInput<'_>, rec: &Recorder) -> Result<Vec<PerspectiveSpec>, AgentError> {
    let max = env.params.max_perspectives.max(2);
    let (system, user) = env.render(
        PromptKind::MpPlan,
        &[
            ("tx_hash", tx.hash.to_string()),
            ("context", tx.context.to_string()),
            ("taxonomy", env.taxonomy.render_prompt_catalog()),
            ("max_perspectives", max.to_string()),
        ],
    )?;
    let mut plan = Vec::new();
    for stage in ["plan", "plan-retry"] {
        let mut prompt = format!("{}\n{user}", header(&[("task", "MP"), ("stage", stage)]));
        if stage == "plan-retry" {
            prompt.push_str(&format!(
                "\n\nYour previous plan had {} distinct perspective(s). Propose at least two.",
                plan.len()
            ));
        }
        let messages = vec![ChatMessage::system(system.clone()), ChatMessage::user(prompt)];
        let repair = header(&[("task", "REPAIR"), ("repair-of", "MP"), ("stage", stage)]);
        plan = env
            .llm
            .complete_parsed(rec, Stage::Mp, None, RoleKind::Creative, messages, &repair, FORMAT, parse_plan)
            .await?;
        if plan.len() >= 2 {
            break;
        }
        rec.warn(Stage::Mp, format!("degenerate plan with {} perspective(s)", plan.len()));
    }
    if plan.len() < 2 {
        rec.warn(Stage::Mp, "falling back to the canonical perspectives");
        plan = PerspectiveSpec::canonical();
    }
    if plan.len() > max {
        rec.warn(Stage::Mp, format!("plan truncated from {} to {max} perspectives", plan.len()));
        plan.truncate(max);
    }
    rec.record(
        Stage::Mp,
        None,
        Event::Plan {
            perspectives: plan.iter().map(|p| p.name.clone()).collect(),
        },
    );
    Ok(plan)
}
