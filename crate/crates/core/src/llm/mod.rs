//! Chat-completion backends, role-based decoding policy and structured
//! output parsing.

pub mod client;
pub mod mock;
pub mod openai;
pub mod structured;

use std::fmt;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use client::{LlmClient, LlmRetry};
pub use mock::{MockBackend, MockScript, ScriptEntry};
pub use openai::OpenAiBackend;
pub use structured::{extract_json, FieldSpec, Schema, TypeTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatRole {
    System,
    User,
    Assistant,
    Tool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: ChatRole,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: ChatRole::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: ChatRole::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: ChatRole::Assistant,
            content: content.into(),
        }
    }
}

/// Creative roles plan and interpret (MP, DE); executive roles solve and
/// judge (QS, CE).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoleKind {
    Creative,
    Executive,
}

impl fmt::Display for RoleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoleKind::Creative => "creative",
            RoleKind::Executive => "executive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodingParams {
    pub temperature: f64,
    pub top_p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RolePolicy {
    pub creative: DecodingParams,
    pub executive: DecodingParams,
}

impl Default for RolePolicy {
    fn default() -> Self {
        Self {
            creative: DecodingParams {
                temperature: 0.5,
                top_p: 1.0,
            },
            executive: DecodingParams {
                temperature: 0.0,
                top_p: 1.0,
            },
        }
    }
}

impl RolePolicy {
    pub fn params(&self, kind: RoleKind) -> DecodingParams {
        match kind {
            RoleKind::Creative => self.creative,
            RoleKind::Executive => self.executive,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (kind, p) in [("creative", self.creative), ("executive", self.executive)] {
            if !(0.0..=2.0).contains(&p.temperature) {
                return Err(format!("{kind} temperature {} outside [0, 2]", p.temperature));
            }
            if !(p.top_p > 0.0 && p.top_p <= 1.0) {
                return Err(format!("{kind} top_p {} outside (0, 1]", p.top_p));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub top_p: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub usage: Option<Usage>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("http {status}: {body}")]
    Http { status: u16, body: String },
    #[error("context window exceeded: {0}")]
    ContextOverflow(String),
    #[error("mock script has no entry for prompt: {0}")]
    ScriptExhausted(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("malformed backend response: {0}")]
    Malformed(String),
    #[error("could not parse structured output after repair: {0}")]
    Structure(String),
}

impl LlmError {
    pub fn is_transient(&self) -> bool {
        match self {
            LlmError::Transport(_) | LlmError::Timeout => true,
            LlmError::Http { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

#[async_trait]
pub trait LlmBackend: Send + Sync {
    async fn complete(&self, request: &CompletionRequest) -> Result<Completion, LlmError>;

    /// True when identical requests always yield identical responses; wall
    /// times are then left out of transcripts.
    fn is_deterministic(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_policy_matches_role_split() {
        let p = RolePolicy::default();
        assert_eq!(p.params(RoleKind::Creative).temperature, 0.5);
        assert_eq!(p.params(RoleKind::Executive).temperature, 0.0);
        assert_eq!(p.params(RoleKind::Executive).top_p, 1.0);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn policy_bounds() {
        let mut p = RolePolicy::default();
        p.creative.temperature = 2.5;
        assert!(p.validate().is_err());
        let mut p = RolePolicy::default();
        p.executive.top_p = 0.0;
        assert!(p.validate().is_err());
    }
}
