//! The four agent roles: planner (MP), domain experts (DE), question
//! solvers (QS) and the evaluator (CE). Each is a function of the model,
//! the tools and the state handed to it; the workflow owns scheduling.

pub mod ce;
pub mod de;
pub mod mp;
pub mod prompts;
pub mod qs;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::llm::{LlmClient, LlmError};
use crate::taxonomy::{IntentCode, IntentSet, Taxonomy};
use crate::toolbox::ToolError;

pub use ce::{aggregate_without_verification, ce_evaluate, rank_scores, Score};
pub use de::{de_answer_directly, de_compose_report, de_generate_questions, parse_report};
pub use mp::{mp_plan, parse_plan};
pub use prompts::{PromptKind, PromptSet, PromptStyle, Template};
pub use qs::{parse_step, qs_direct, qs_solve, Step};

pub const CANONICAL_PERSPECTIVES: [&str; 3] = [
    "Smart Contract Analysis",
    "Temporal Context Analysis",
    "Market Dynamics Analysis",
];

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Tool(ToolError),
    #[error("prompt template: {0}")]
    Prompt(String),
    #[error("no perspective proposed any candidate intent")]
    NoCandidates,
}

impl From<ToolError> for AgentError {
    fn from(e: ToolError) -> Self {
        match e {
            ToolError::Llm(e) => AgentError::Llm(e),
            other => AgentError::Tool(other),
        }
    }
}

/// Caps and thresholds shared by the agents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentParams {
    pub max_perspectives: usize,
    pub min_questions: usize,
    pub max_questions: usize,
    pub max_iterations: usize,
    /// Estimated tokens one QS prompt may occupy.
    pub qs_budget: usize,
    pub ce_threshold: f64,
}

impl Default for AgentParams {
    fn default() -> Self {
        Self {
            max_perspectives: 6,
            min_questions: 3,
            max_questions: 8,
            max_iterations: 8,
            qs_budget: crate::toolbox::DEFAULT_QS_BUDGET,
            ce_threshold: 0.5,
        }
    }
}

/// What every agent call needs.
#[derive(Clone, Copy)]
pub struct AgentEnv<'a> {
    pub llm: &'a LlmClient,
    pub prompts: &'a PromptSet,
    pub taxonomy: &'a Taxonomy,
    pub params: AgentParams,
}

impl AgentEnv<'_> {
    pub(crate) fn render(&self, kind: PromptKind, vars: &[(&str, String)]) -> Result<(String, String), AgentError> {
        let map: HashMap<&str, String> = vars.iter().cloned().collect();
        self.prompts.get(kind).render(&map).map_err(AgentError::Prompt)
    }
}

/// The transaction as the agents see it.
#[derive(Debug, Clone, Copy)]
pub struct TxInput<'a> {
    pub hash: &'a str,
    pub context: &'a str,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerspectiveSpec {
    pub name: String,
    pub rationale: String,
    pub prompt_seed: String,
}

impl PerspectiveSpec {
    /// The fixed starting trio.
    pub fn canonical() -> Vec<PerspectiveSpec> {
        let seeds = [
            "Identify the contracts and methods called and what they do to the user's assets.",
            "Place the transaction among the sender's earlier and later transactions.",
            "Relate the transaction to token prices and market conditions at the time.",
        ];
        CANONICAL_PERSPECTIVES
            .iter()
            .zip(seeds)
            .map(|(name, seed)| PerspectiveSpec {
                name: name.to_string(),
                rationale: format!("{name} is one of the standard perspectives."),
                prompt_seed: seed.to_string(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub objectives: String,
    pub todo_items: Vec<String>,
    pub prompts: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    /// 1-based.
    pub index: usize,
    pub text: String,
    pub perspective: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub tool: String,
    pub args: Value,
    pub source_uri: Option<String>,
    pub excerpt: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub question_index: usize,
    pub text: String,
    pub evidence: Vec<Evidence>,
    pub iterations_used: usize,
    /// No FINAL was reached, or nothing was retrieved successfully.
    pub reasoning_only: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub code: IntentCode,
    pub justification: String,
    /// Numbers of the supporting answers.
    pub evidence: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    #[serde(rename = "name")]
    pub perspective: String,
    pub narrative: String,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub code: IntentCode,
    pub verifiability: f64,
    pub relevance: f64,
    pub combined: f64,
    pub verdict: Verdict,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RankedIntents {
    pub entries: Vec<RankedEntry>,
}

impl RankedIntents {
    pub fn accepted(&self) -> IntentSet {
        let mut set = IntentSet::new();
        for e in self.entries.iter().filter(|e| e.verdict == Verdict::Accepted) {
            set.insert(e.code);
        }
        set
    }
}

pub(crate) fn header(parts: &[(&str, &str)]) -> String {
    parts.iter().map(|(k, v)| format!("[{k}={v}]")).collect()
}

pub(crate) fn numbered(items: &[String]) -> String {
    items
        .iter()
        .enumerate()
        .map(|(i, t)| format!("{}. {t}", i + 1))
        .collect::<Vec<_>>()
        .join("\n")
}
