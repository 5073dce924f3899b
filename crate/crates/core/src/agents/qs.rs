//! Question solving in a Thought / Action / Observation loop.
//!
//! Each step is one completion whose last user message carries the task
//! header, the inputs and the scratchpad of earlier steps. A reply holds a
//! line `ACTION: tool({json})` or `FINAL: text`.

use serde_json::{Map, Value};

use super::de::{parse_report, REPORT_FORMAT};
use super::{header, AgentEnv, AgentError, Answer, AnalysisReport, Evidence, PerspectiveSpec, PromptKind, Question, TxInput};
use crate::llm::{ChatMessage, LlmError, RoleKind};
use crate::tokens::estimate_tokens;
use crate::toolbox::{chunk_and_summarize, Summarizer, ToolError, Toolbox};
use crate::transcript::{Event, Recorder, Stage};

const EXCERPT_CHARS: usize = 240;

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Action { tool: String, args: Value },
    Final(String),
    /// Neither line was usable; the reason is fed back as an observation.
    Malformed(String),
}

/// Reads the first ACTION or FINAL line of a reply.
pub fn parse_step(reply: &str) -> Step {
    let lines: Vec<&str> = reply.lines().collect();
    for (i, raw) in lines.iter().enumerate() {
        let line = raw.trim().trim_start_matches(['-', '*', ' ']);
        if let Some(rest) = line.strip_prefix("FINAL:") {
            let mut text = rest.trim().to_string();
            for more in &lines[i + 1..] {
                text.push('\n');
                text.push_str(more);
            }
            return Step::Final(text.trim().to_string());
        }
        if let Some(rest) = line.strip_prefix("ACTION:") {
            return parse_action(rest.trim());
        }
    }
    Step::Malformed("the reply had no ACTION or FINAL line".into())
}

fn parse_action(text: &str) -> Step {
    let Some(open) = text.find('(') else {
        return Step::Malformed(format!("ACTION needs the form tool({{json}}), got {text:?}"));
    };
    let tool = text[..open].trim().to_string();
    let Some(close) = text.rfind(')').filter(|c| *c > open) else {
        return Step::Malformed("ACTION is missing its closing parenthesis".into());
    };
    let inner = text[open + 1..close].trim();
    let args = if inner.is_empty() {
        Value::Object(Map::new())
    } else {
        match serde_json::from_str::<Value>(inner) {
            Ok(v @ Value::Object(_)) => v,
            Ok(_) => return Step::Malformed("ACTION arguments must be a JSON object".into()),
            Err(e) => return Step::Malformed(format!("ACTION arguments are not valid JSON: {e}")),
        }
    };
    if tool.is_empty() {
        return Step::Malformed("ACTION names no tool".into());
    }
    Step::Action { tool, args }
}

/// The reasoning part of a reply, without the ACTION or FINAL line.
fn thought_of(reply: &str) -> String {
    reply
        .lines()
        .map(str::trim)
        .take_while(|l| !l.starts_with("ACTION:") && !l.starts_with("FINAL:"))
        .map(|l| l.strip_prefix("Thought:").unwrap_or(l).trim())
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

fn excerpt(text: &str) -> String {
    match text.char_indices().nth(EXCERPT_CHARS) {
        Some((i, _)) => format!("{}..", &text[..i]),
        None => text.to_string(),
    }
}

struct LoopOutcome {
    final_text: Option<String>,
    last_thought: String,
    evidence: Vec<Evidence>,
    iterations: usize,
    /// Prompt and reply of the last step, for repairs.
    last_messages: Vec<ChatMessage>,
    last_reply: String,
}

struct LoopSpec<'a> {
    kind: PromptKind,
    vars: Vec<(&'static str, String)>,
    route: Vec<(&'a str, String)>,
    question: Option<usize>,
}

async fn react_loop(env: &AgentEnv<'_>, toolbox: &Toolbox, spec: LoopSpec<'_>, rec: &Recorder) -> Result<LoopOutcome, AgentError> {
    let summarizer = Summarizer { llm: env.llm, rec };
    let budget = env.params.qs_budget.max(1);
    let max = env.params.max_iterations.max(1);
    let mut vars = spec.vars.clone();
    vars.push(("tools", toolbox.list_tools()));
    vars.push(("max_iterations", max.to_string()));

    // inputs other than the scratchpad get at most half the budget
    let (system, user) = render_with(env, spec.kind, &vars, "")?;
    if estimate_tokens(&system) + estimate_tokens(&user) > budget / 2 {
        if let Some(slot) = vars.iter_mut().find(|(k, _)| *k == "memory") {
            rec.warn(Stage::Qs, "memory over budget, summarizing");
            slot.1 = chunk_and_summarize(&slot.1, (budget / 4).max(1), env.llm, rec).await?.text;
        }
    }

    let mut scratch: Vec<String> = Vec::new();
    let mut evidence = Vec::new();
    let mut last_thought = String::new();
    let mut overflowed = false;
    let mut last_messages = Vec::new();
    let mut last_reply = String::new();
    let mut step = 1;
    while step <= max {
        let mut pad = if scratch.is_empty() { "(none yet)".to_string() } else { scratch.join("\n\n") };
        let (system, user) = render_with(env, spec.kind, &vars, "")?;
        let fixed = estimate_tokens(&system) + estimate_tokens(&user) + 64;
        let room = budget.saturating_sub(fixed).max(256);
        if estimate_tokens(&pad) > room {
            pad = chunk_and_summarize(&pad, room, env.llm, rec).await?.text;
            scratch = vec![pad.clone()];
        }
        let (system, user) = render_with(env, spec.kind, &vars, &pad)?;
        let step_s = step.to_string();
        let mut route: Vec<(&str, &str)> = spec.route.iter().map(|(k, v)| (*k, v.as_str())).collect();
        route.push(("step", &step_s));
        let prompt = format!("{}{}\n{user}", header(&[("task", "QS")]), header(&route));
        let messages = vec![ChatMessage::system(system), ChatMessage::user(prompt)];
        let reply = match env
            .llm
            .complete(rec, Stage::Qs, spec.question, RoleKind::Executive, messages.clone())
            .await
        {
            Ok(r) => r,
            Err(LlmError::ContextOverflow(_)) if !overflowed && !scratch.is_empty() => {
                overflowed = true;
                rec.warn(Stage::Qs, "context overflow, summarizing the scratchpad");
                let joined = scratch.join("\n\n");
                let target = (estimate_tokens(&joined) / 2).max(1);
                scratch = vec![chunk_and_summarize(&joined, target, env.llm, rec).await?.text];
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let thought = thought_of(&reply);
        if !thought.is_empty() {
            last_thought = thought;
        }
        last_messages = messages;
        last_reply = reply.clone();
        match parse_step(&reply) {
            Step::Final(text) => {
                return Ok(LoopOutcome {
                    final_text: Some(text),
                    last_thought,
                    evidence,
                    iterations: step,
                    last_messages,
                    last_reply,
                })
            }
            Step::Action { tool, args } => {
                let observation = match toolbox.invoke(&tool, &args, Some(summarizer)).await {
                    Ok(r) => {
                        rec.record(
                            Stage::Qs,
                            spec.question,
                            Event::Tool {
                                tool: tool.clone(),
                                args: args.clone(),
                                rendered: r.rendered.clone(),
                                source_uri: r.source_uri.clone(),
                                truncated: r.truncated,
                                error: None,
                            },
                        );
                        evidence.push(Evidence {
                            tool,
                            args,
                            source_uri: r.source_uri,
                            excerpt: excerpt(&r.rendered),
                            error: None,
                        });
                        r.rendered
                    }
                    Err(ToolError::Llm(e)) => return Err(e.into()),
                    Err(e) => {
                        let message = e.to_string();
                        rec.record(
                            Stage::Qs,
                            spec.question,
                            Event::Tool {
                                tool: tool.clone(),
                                args: args.clone(),
                                rendered: String::new(),
                                source_uri: None,
                                truncated: false,
                                error: Some(message.clone()),
                            },
                        );
                        evidence.push(Evidence {
                            tool,
                            args,
                            source_uri: None,
                            excerpt: String::new(),
                            error: Some(message.clone()),
                        });
                        format!("ERROR: {message}")
                    }
                };
                scratch.push(format!("Step {step}:\n{}\nObservation: {observation}", reply.trim()));
            }
            Step::Malformed(why) => {
                scratch.push(format!(
                    "Step {step}:\n{}\nObservation: {why}. Reply with one ACTION line or one FINAL line.",
                    reply.trim()
                ));
            }
        }
        step += 1;
    }
    Ok(LoopOutcome {
        final_text: None,
        last_thought,
        evidence,
        iterations: max,
        last_messages,
        last_reply,
    })
}

fn render_with(
    env: &AgentEnv<'_>,
    kind: PromptKind,
    vars: &[(&'static str, String)],
    scratchpad: &str,
) -> Result<(String, String), AgentError> {
    let mut all = vars.to_vec();
    all.push(("scratchpad", scratchpad.to_string()));
    env.render(kind, &all)
}

fn render_memory(memory: &[(Question, Answer)]) -> String {
    if memory.is_empty() {
        return "(none)".to_string();
    }
    memory
        .iter()
        .map(|(q, a)| format!("Q{}: {}\nA{}: {}", q.index, q.text, q.index, a.text))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Answers `question` given the answers to the perspective's earlier
/// questions. Hitting the iteration cap yields the last thought, flagged
/// reasoning-only.
pub async fn qs_solve(
    env: &AgentEnv<'_>,
    toolbox: &Toolbox,
    question: &Question,
    memory: &[(Question, Answer)],
    tx: TxInput<'_>,
    rec: &Recorder,
) -> Result<Answer, AgentError> {
    let spec = LoopSpec {
        kind: PromptKind::QsSolve,
        vars: vec![
            ("perspective", question.perspective.clone()),
            ("tx_hash", tx.hash.to_string()),
            ("context", tx.context.to_string()),
            ("memory", render_memory(memory)),
            ("question", question.text.clone()),
        ],
        route: vec![
            ("perspective", question.perspective.clone()),
            ("question", question.index.to_string()),
        ],
        question: Some(question.index),
    };
    let out = react_loop(env, toolbox, spec, rec).await?;
    let retrieved = out.evidence.iter().any(|e| e.error.is_none());
    Ok(match out.final_text {
        Some(text) => Answer {
            question_index: question.index,
            text,
            evidence: out.evidence,
            iterations_used: out.iterations,
            reasoning_only: !retrieved,
        },
        None => {
            rec.warn(Stage::Qs, format!("question {} hit the iteration cap", question.index));
            Answer {
                question_index: question.index,
                text: if out.last_thought.is_empty() { "(no conclusion reached)".into() } else { out.last_thought },
                evidence: out.evidence,
                iterations_used: out.iterations,
                reasoning_only: true,
            }
        }
    })
}

/// Ablation path without question decomposition: one solver explains the
/// transaction from the perspective and its FINAL is the report.
pub async fn qs_direct(
    env: &AgentEnv<'_>,
    toolbox: &Toolbox,
    perspective: &PerspectiveSpec,
    tx: TxInput<'_>,
    rec: &Recorder,
) -> Result<AnalysisReport, AgentError> {
    let spec = LoopSpec {
        kind: PromptKind::QsDirect,
        vars: vec![
            ("perspective", perspective.name.clone()),
            ("prompt_seed", perspective.prompt_seed.clone()),
            ("tx_hash", tx.hash.to_string()),
            ("context", tx.context.to_string()),
            ("taxonomy", env.taxonomy.render_prompt_catalog()),
        ],
        route: vec![("perspective", perspective.name.clone()), ("mode", "direct".to_string())],
        question: None,
    };
    let out = react_loop(env, toolbox, spec, rec).await?;
    let Some(text) = out.final_text else {
        rec.warn(Stage::Qs, "direct analysis hit the iteration cap without a report");
        return Ok(AnalysisReport {
            perspective: perspective.name.clone(),
            narrative: out.last_thought,
            candidates: Vec::new(),
        });
    };
    let parse = |t: &str| parse_report(t, &perspective.name, env.taxonomy, 0);
    let (report, warnings) = match parse(&text) {
        Ok(r) => r,
        Err(err) => {
            let repair_header = format!(
                "{}{}",
                header(&[("task", "REPAIR"), ("repair-of", "QS")]),
                header(&[("perspective", perspective.name.as_str()), ("mode", "direct")])
            );
            let fixed = env
                .llm
                .repair(rec, Stage::Qs, None, out.last_messages, out.last_reply, &repair_header, &err, REPORT_FORMAT)
                .await?;
            parse(&fixed).map_err(LlmError::Structure)?
        }
    };
    for w in warnings {
        rec.warn(Stage::Qs, w);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn grammar() {
        assert_eq!(
            parse_step("Thought: check\nACTION: sig_lookup({\"selector\": \"0xa9059cbb\"})"),
            Step::Action {
                tool: "sig_lookup".into(),
                args: json!({"selector": "0xa9059cbb"})
            }
        );
        assert_eq!(parse_step("FINAL: done\nmore"), Step::Final("done\nmore".into()));
        assert_eq!(
            parse_step("ACTION: list()"),
            Step::Action {
                tool: "list".into(),
                args: json!({})
            }
        );
        assert!(matches!(parse_step("just musing"), Step::Malformed(_)));
        assert!(matches!(parse_step("ACTION: x([1])"), Step::Malformed(_)));
        assert!(matches!(parse_step("ACTION: x({bad)"), Step::Malformed(_)));
    }

    #[test]
    fn thought_extraction() {
        assert_eq!(thought_of("Thought: a\nb\nACTION: t({})"), "a b");
    }
}
