//! Tools the question solvers call, and the budget optimizer applied to
//! everything they return.
//!
//! Every tool is read-only. Results are plain text; anything over the
//! per-result budget is summarized (when a model is available) or cut.

pub mod chain_tools;
pub mod history;
pub mod prices;
pub mod summarize;
pub mod web;

use std::sync::Arc;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::chaindata::{ChainError, ChainSource, SignatureResolver};
use crate::llm::{LlmClient, LlmError, Schema};
use crate::tokens::{estimate_tokens, truncate_to_budget};
use crate::transcript::Recorder;

pub use chain_tools::{SigLookupTool, TxFetchTool};
pub use history::{AddressHistoryTool, HistoryEntry, HistoryProvider};
pub use prices::{PriceLookupTool, PriceProvider, Quote};
pub use summarize::{chunk_and_summarize, ChunkParams, Summary};
pub use web::{body_text, WebFetchTool, WebSource};

pub const DEFAULT_RESULT_BUDGET: usize = 4096;
pub const DEFAULT_QS_BUDGET: usize = 24_000;

#[derive(Debug, Clone, Error)]
pub enum ToolError {
    #[error("tool {0:?} is already registered")]
    DuplicateTool(String),
    #[error("no tool named {0:?}")]
    UnknownTool(String),
    #[error("bad arguments for {tool}: {message}")]
    InvalidArgs { tool: String, message: String },
    #[error("fetch failed with status {status}: {url}")]
    Fetch { status: u16, url: String },
    #[error("unknown asset {0:?}")]
    UnknownAsset(String),
    #[error("source unavailable: {0}")]
    Unavailable(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SideEffects {
    ReadOnly,
}

#[derive(Debug, Clone)]
pub struct ToolSpec {
    pub name: &'static str,
    /// Shown to the model verbatim.
    pub description: &'static str,
    pub args: Schema,
    pub side_effects: SideEffects,
}

/// What a handler produces before budgeting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToolOutput {
    pub text: String,
    pub source_uri: Option<String>,
}

impl ToolOutput {
    pub fn new(text: impl Into<String>, source_uri: Option<String>) -> Self {
        Self {
            text: text.into(),
            source_uri,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolResult {
    pub tool: String,
    pub rendered: String,
    pub token_estimate: usize,
    pub source_uri: Option<String>,
    pub truncated: bool,
}

#[async_trait]
pub trait Tool: Send + Sync {
    fn spec(&self) -> &ToolSpec;

    async fn call(&self, args: &Value) -> Result<ToolOutput, ToolError>;
}

/// Model and transcript used to compress oversized results.
#[derive(Clone, Copy)]
pub struct Summarizer<'a> {
    pub llm: &'a LlmClient,
    pub rec: &'a Recorder,
}

pub struct Toolbox {
    tools: Vec<Arc<dyn Tool>>,
    result_budget: usize,
}

impl Toolbox {
    pub fn new(result_budget: usize) -> Self {
        Self {
            tools: Vec::new(),
            result_budget: result_budget.max(1),
        }
    }

    /// The standard five tools over the given sources.
    pub fn standard(deps: ToolDeps, result_budget: usize) -> Self {
        let mut tb = Self::new(result_budget);
        let tools: [Arc<dyn Tool>; 5] = [
            Arc::new(TxFetchTool::new(deps.chain, deps.resolver.clone())),
            Arc::new(SigLookupTool::new(deps.resolver)),
            Arc::new(WebFetchTool::new(deps.web)),
            Arc::new(PriceLookupTool::new(deps.prices)),
            Arc::new(AddressHistoryTool::new(deps.history, deps.history_limit)),
        ];
        for t in tools {
            tb.register(t).expect("standard tool names are distinct");
        }
        tb
    }

    pub fn register(&mut self, tool: Arc<dyn Tool>) -> Result<(), ToolError> {
        let name = tool.spec().name;
        if self.tools.iter().any(|t| t.spec().name == name) {
            return Err(ToolError::DuplicateTool(name.to_string()));
        }
        self.tools.push(tool);
        Ok(())
    }

    pub fn result_budget(&self) -> usize {
        self.result_budget
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.tools.iter().map(|t| t.spec().name).collect()
    }

    pub fn specs(&self) -> Vec<&ToolSpec> {
        self.tools.iter().map(|t| t.spec()).collect()
    }

    /// Numbered catalog for prompts: name, description, arguments.
    pub fn list_tools(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.tools.iter().enumerate() {
            let spec = t.spec();
            out.push_str(&format!(
                "{}. {}: {}\n   args: {}\n",
                i + 1,
                spec.name,
                spec.description,
                spec.args.describe()
            ));
        }
        out
    }

    /// Validates, runs and budgets one call. Oversized output is summarized
    /// when `summarizer` is given and hard-truncated otherwise.
    pub async fn invoke(&self, name: &str, args: &Value, summarizer: Option<Summarizer<'_>>) -> Result<ToolResult, ToolError> {
        let tool = self
            .tools
            .iter()
            .find(|t| t.spec().name == name)
            .ok_or_else(|| ToolError::UnknownTool(name.to_string()))?;
        tool.spec().args.validate(args).map_err(|message| ToolError::InvalidArgs {
            tool: name.to_string(),
            message,
        })?;
        let output = tool.call(args).await?;
        let (rendered, truncated) = fit_to_budget(output.text, self.result_budget, summarizer).await?;
        Ok(ToolResult {
            tool: name.to_string(),
            token_estimate: estimate_tokens(&rendered),
            rendered,
            source_uri: output.source_uri,
            truncated,
        })
    }
}

/// Returns the text within `budget` and whether it had to be compressed.
pub async fn fit_to_budget(
    text: String,
    budget: usize,
    summarizer: Option<Summarizer<'_>>,
) -> Result<(String, bool), ToolError> {
    if estimate_tokens(&text) <= budget {
        return Ok((text, false));
    }
    let out = match summarizer {
        Some(s) => chunk_and_summarize(&text, budget, s.llm, s.rec).await?.text,
        None => truncate_to_budget(&text, budget).to_string(),
    };
    Ok((out, true))
}

/// Sources behind the standard toolbox.
pub struct ToolDeps {
    pub chain: Arc<dyn ChainSource>,
    pub resolver: Arc<SignatureResolver>,
    pub web: WebSource,
    pub prices: PriceProvider,
    pub history: HistoryProvider,
    pub history_limit: usize,
}

pub(crate) fn str_arg<'a>(tool: &str, args: &'a Value, key: &str) -> Result<&'a str, ToolError> {
    args.get(key).and_then(Value::as_str).ok_or_else(|| ToolError::InvalidArgs {
        tool: tool.to_string(),
        message: format!("missing string \"{key}\""),
    })
}

pub(crate) fn http_client(timeout: std::time::Duration) -> Result<reqwest::Client, ToolError> {
    reqwest::Client::builder()
        .timeout(timeout)
        .build()
        .map_err(|e| ToolError::Unavailable(e.to_string()))
}
