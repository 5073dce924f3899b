use std::path::Path;
use std::sync::Mutex;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::{ChatRole, Completion, CompletionRequest, LlmBackend, LlmError};
use crate::transcript::{Event, Record};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Matcher {
    One(String),
    /// Every substring must occur.
    All(Vec<String>),
}

impl Matcher {
    fn matches(&self, text: &str) -> bool {
        match self {
            Matcher::One(s) => text.contains(s.as_str()),
            Matcher::All(parts) => parts.iter().all(|p| text.contains(p.as_str())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    #[serde(rename = "match")]
    pub matcher: Matcher,
    pub response: String,
    /// Reusable entries are never consumed.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub repeat: bool,
}

/// Ordered canned responses keyed by substrings of the last user message.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MockScript {
    pub entries: Vec<ScriptEntry>,
}

impl MockScript {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("mock script: {e}"))
    }

    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_json(&text)
    }

    pub fn push(&mut self, matcher: &str, response: &str) -> &mut Self {
        self.entries.push(ScriptEntry {
            matcher: Matcher::One(matcher.to_string()),
            response: response.to_string(),
            repeat: false,
        });
        self
    }

    /// Replays recorded exchanges: each becomes a one-shot entry matching the
    /// exact last user message it answered.
    pub fn from_transcript(records: &[Record]) -> Self {
        let entries = records
            .iter()
            .filter_map(|r| match &r.event {
                Event::Exchange { messages, response, .. } => {
                    let last_user = messages.iter().rev().find(|m| m.role == ChatRole::User)?;
                    Some(ScriptEntry {
                        matcher: Matcher::One(last_user.content.clone()),
                        response: response.clone(),
                        repeat: false,
                    })
                }
                _ => None,
            })
            .collect();
        Self { entries }
    }
}

pub struct MockBackend {
    entries: Vec<ScriptEntry>,
    consumed: Mutex<Vec<bool>>,
}

impl MockBackend {
    pub fn new(script: MockScript) -> Self {
        let consumed = Mutex::new(vec![false; script.entries.len()]);
        Self {
            entries: script.entries,
            consumed,
        }
    }

    /// One-shot entries not yet used.
    pub fn remaining(&self) -> usize {
        let consumed = self.consumed.lock().expect("mock lock");
        self.entries
            .iter()
            .zip(consumed.iter())
            .filter(|(e, c)| !e.repeat && !**c)
            .count()
    }
}

#[async_trait]
impl LlmBackend for MockBackend {
    async fn complete(&self, request: &CompletionRequest) -> Result<Completion, LlmError> {
        let prompt = request
            .messages
            .iter()
            .rev()
            .find(|m| m.role == ChatRole::User)
            .map_or("", |m| m.content.as_str());
        let mut consumed = self.consumed.lock().expect("mock lock");
        for (i, entry) in self.entries.iter().enumerate() {
            if consumed[i] || !entry.matcher.matches(prompt) {
                continue;
            }
            if !entry.repeat {
                consumed[i] = true;
            }
            return Ok(Completion {
                text: entry.response.clone(),
                usage: None,
            });
        }
        let head: String = prompt.lines().take(2).collect::<Vec<_>>().join(" | ");
        Err(LlmError::ScriptExhausted(head.chars().take(200).collect()))
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}
