//! Append-only record of everything a run did: model exchanges, tool calls,
//! warnings and failures.
//!
//! Records carry a phase, an optional perspective and a per-(phase,
//! perspective) sequence number. Sorting by that key gives the same order no
//! matter how concurrent perspectives interleaved.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::llm::{ChatMessage, RoleKind, Usage};
use crate::tokens::estimate_tokens;

pub const SCHEMA_VERSION: u8 = 1;

/// Phase 0 covers data preparation and planning, 1 the perspective
/// pipelines, 2 evaluation and assembly.
pub const PHASE_SETUP: u8 = 0;
pub const PHASE_PERSPECTIVES: u8 = 1;
pub const PHASE_EVALUATION: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    #[serde(rename = "CHAIN")]
    Chain,
    #[serde(rename = "MP")]
    Mp,
    #[serde(rename = "DE")]
    De,
    #[serde(rename = "QS")]
    Qs,
    #[serde(rename = "CE")]
    Ce,
    #[serde(rename = "REPAIR")]
    Repair,
    #[serde(rename = "SUMMARIZE")]
    Summarize,
    #[serde(rename = "ENGINE")]
    Engine,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Chain => "CHAIN",
            Stage::Mp => "MP",
            Stage::De => "DE",
            Stage::Qs => "QS",
            Stage::Ce => "CE",
            Stage::Repair => "REPAIR",
            Stage::Summarize => "SUMMARIZE",
            Stage::Engine => "ENGINE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Exchange {
        role_kind: RoleKind,
        temperature: f64,
        top_p: f64,
        model: String,
        messages: Vec<ChatMessage>,
        response: String,
        usage: Option<Usage>,
    },
    Tool {
        tool: String,
        args: Value,
        rendered: String,
        source_uri: Option<String>,
        truncated: bool,
        error: Option<String>,
    },
    Warning {
        message: String,
    },
    Plan {
        perspectives: Vec<String>,
    },
    Failure {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub v: u8,
    pub phase: u8,
    pub perspective_index: Option<usize>,
    pub perspective: Option<String>,
    pub seq: u64,
    pub stage: Stage,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub question: Option<usize>,
    pub wall_time_ms: Option<u64>,
    #[serde(flatten)]
    pub event: Event,
}

impl Record {
    fn sort_key(&self) -> (u8, usize, u64) {
        (self.phase, self.perspective_index.map_or(0, |i| i + 1), self.seq)
    }

    pub fn is_exchange(&self) -> bool {
        matches!(self.event, Event::Exchange { .. })
    }

    pub fn is_tool(&self) -> bool {
        matches!(self.event, Event::Tool { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Cost {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    /// Set when at least one exchange had no backend-reported usage.
    pub estimated: bool,
}

#[derive(Default)]
struct Inner {
    records: Vec<Record>,
    counters: HashMap<(u8, Option<usize>), u64>,
}

pub struct Transcript {
    inner: Mutex<Inner>,
    deterministic: bool,
    started: Instant,
}

impl Transcript {
    /// With `deterministic` set, wall times are omitted so identical runs
    /// produce identical transcripts.
    pub fn new(deterministic: bool) -> Arc<Self> {
        Arc::new(Self {
            inner: Mutex::new(Inner::default()),
            deterministic,
            started: Instant::now(),
        })
    }

    pub fn recorder(self: &Arc<Self>, phase: u8, perspective: Option<(usize, String)>) -> Recorder {
        Recorder {
            transcript: Arc::clone(self),
            phase,
            perspective,
        }
    }

    fn push(&self, phase: u8, perspective: &Option<(usize, String)>, stage: Stage, question: Option<usize>, event: Event) {
        let wall_time_ms = (!self.deterministic).then(|| self.started.elapsed().as_millis() as u64);
        let mut inner = self.inner.lock().expect("transcript lock");
        let counter = inner.counters.entry((phase, perspective.as_ref().map(|p| p.0))).or_insert(0);
        let seq = *counter;
        *counter += 1;
        inner.records.push(Record {
            v: SCHEMA_VERSION,
            phase,
            perspective_index: perspective.as_ref().map(|p| p.0),
            perspective: perspective.as_ref().map(|p| p.1.clone()),
            seq,
            stage,
            question,
            wall_time_ms,
            event,
        });
    }

    /// All records in canonical order.
    pub fn records(&self) -> Vec<Record> {
        let mut records = self.inner.lock().expect("transcript lock").records.clone();
        records.sort_by_key(Record::sort_key);
        records
    }

    pub fn to_jsonl(&self) -> String {
        records_to_jsonl(&self.records())
    }

    pub fn cost(&self) -> Cost {
        cost_of(&self.records())
    }
}

pub fn records_to_jsonl(records: &[Record]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_jsonl(text: &str) -> Result<Vec<Record>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 1)))
        .collect()
}

pub fn cost_of(records: &[Record]) -> Cost {
    let mut cost = Cost::default();
    for r in records {
        if let Event::Exchange {
            messages,
            response,
            usage,
            ..
        } = &r.event
        {
            match usage {
                Some(u) => {
                    cost.prompt_tokens += u.prompt_tokens;
                    cost.completion_tokens += u.completion_tokens;
                }
                None => {
                    cost.estimated = true;
                    cost.prompt_tokens += messages.iter().map(|m| estimate_tokens(&m.content) as u64).sum::<u64>();
                    cost.completion_tokens += estimate_tokens(response) as u64;
                }
            }
        }
    }
    cost
}

/// Handle bound to one phase and scope.
#[derive(Clone)]
pub struct Recorder {
    transcript: Arc<Transcript>,
    phase: u8,
    perspective: Option<(usize, String)>,
}

impl Recorder {
    pub fn record(&self, stage: Stage, question: Option<usize>, event: Event) {
        self.transcript.push(self.phase, &self.perspective, stage, question, event);
    }

    pub fn warn(&self, stage: Stage, message: impl Into<String>) {
        let message = message.into();
        tracing::warn!(stage = stage.as_str(), "{message}");
        self.record(stage, None, Event::Warning { message });
    }

    pub fn perspective(&self) -> Option<&str> {
        self.perspective.as_ref().map(|p| p.1.as_str())
    }

    pub fn transcript(&self) -> &Arc<Transcript> {
        &self.transcript
    }
}
