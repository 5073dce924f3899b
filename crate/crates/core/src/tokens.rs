//! Token budgeting heuristics.

/// Estimates how many model tokens a text costs.
pub trait TokenEstimator: Send + Sync {
    fn estimate(&self, text: &str) -> usize;
}

/// Characters divided by four, rounded up.
#[derive(Debug, Clone, Copy, Default)]
pub struct CharRatio;

impl TokenEstimator for CharRatio {
    fn estimate(&self, text: &str) -> usize {
        estimate_tokens(text)
    }
}

pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

/// Longest prefix of `text` (on a char boundary) whose estimate fits `budget`.
pub fn truncate_to_budget(text: &str, budget: usize) -> &str {
    let max_chars = budget.saturating_mul(4);
    match text.char_indices().nth(max_chars) {
        Some((idx, _)) => &text[..idx],
        None => text,
    }
}
