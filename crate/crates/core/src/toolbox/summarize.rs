//! Map-style compression for inputs that exceed a token budget.

use crate::llm::{ChatMessage, LlmClient, RoleKind};
use crate::tokens::{estimate_tokens, truncate_to_budget};
use crate::transcript::{Recorder, Stage};

use super::ToolError;

const SYSTEM: &str = "You condense retrieved material for a blockchain transaction analyst. \
Keep every address, amount, token symbol, method name, timestamp and price exactly as written. \
Drop navigation text, boilerplate and repetition. Reply with the condensed text only.";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkParams {
    pub chunk_tokens: usize,
    pub overlap_tokens: usize,
    pub max_rounds: usize,
}

impl Default for ChunkParams {
    fn default() -> Self {
        Self {
            chunk_tokens: 2000,
            overlap_tokens: 200,
            max_rounds: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Summary {
    pub text: String,
    pub rounds: usize,
    /// The rounds ran out and the result was cut.
    pub hard_truncated: bool,
}

/// Overlapping windows of roughly `chunk_tokens` each.
pub fn split_chunks(text: &str, params: ChunkParams) -> Vec<&str> {
    let size = params.chunk_tokens.max(1) * 4;
    let step = params.chunk_tokens.saturating_sub(params.overlap_tokens).max(1) * 4;
    let bounds: Vec<usize> = text.char_indices().map(|(i, _)| i).chain([text.len()]).collect();
    let n_chars = bounds.len() - 1;
    let mut out = Vec::new();
    let mut start = 0;
    loop {
        let end = (start + size).min(n_chars);
        out.push(&text[bounds[start]..bounds[end]]);
        if end == n_chars {
            break;
        }
        start += step;
    }
    out
}

pub async fn chunk_and_summarize(text: &str, budget: usize, llm: &LlmClient, rec: &Recorder) -> Result<Summary, ToolError> {
    chunk_and_summarize_with(text, budget, ChunkParams::default(), llm, rec).await
}

/// Returns `text` untouched when it fits. Otherwise summarizes chunk by chunk
/// on the executive role, repeating on the joined summaries for at most
/// `max_rounds` rounds, and cuts whatever still does not fit.
pub async fn chunk_and_summarize_with(
    text: &str,
    budget: usize,
    params: ChunkParams,
    llm: &LlmClient,
    rec: &Recorder,
) -> Result<Summary, ToolError> {
    if budget == 0 {
        return Err(ToolError::Precondition("summary budget must be positive".into()));
    }
    let mut current = text.to_string();
    let mut rounds = 0;
    while estimate_tokens(&current) > budget && rounds < params.max_rounds {
        rounds += 1;
        let chunks = split_chunks(&current, params);
        let target = (budget / chunks.len()).max(1);
        let mut parts = Vec::with_capacity(chunks.len());
        for (i, chunk) in chunks.iter().enumerate() {
            let prompt = format!(
                "[task=SUMMARIZE][round={rounds}][chunk={}/{}]\nCondense the following to at most {target} tokens.\n---\n{chunk}",
                i + 1,
                chunks.len()
            );
            let messages = vec![ChatMessage::system(SYSTEM), ChatMessage::user(prompt)];
            let reply = llm.complete(rec, Stage::Summarize, None, RoleKind::Executive, messages).await?;
            parts.push(reply.trim().to_string());
        }
        current = parts.join("\n");
    }
    let hard_truncated = estimate_tokens(&current) > budget;
    if hard_truncated {
        current = truncate_to_budget(&current, budget).to_string();
    }
    Ok(Summary {
        text: current,
        rounds,
        hard_truncated,
    })
}
