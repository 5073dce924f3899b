use std::sync::Arc;

use async_trait::async_trait;
use serde_json::Value;

use super::{str_arg, SideEffects, Tool, ToolError, ToolOutput, ToolSpec};
use crate::chaindata::{decode_bundle, simplify_for_llm, Address, ChainSource, EventDb, Selector, SignatureResolver, TxHash};
use crate::llm::{Schema, TypeTag};

fn bad_arg(tool: &str, e: impl std::fmt::Display) -> ToolError {
    ToolError::InvalidArgs {
        tool: tool.to_string(),
        message: e.to_string(),
    }
}

pub struct TxFetchTool {
    spec: ToolSpec,
    chain: Arc<dyn ChainSource>,
    resolver: Arc<SignatureResolver>,
}

impl TxFetchTool {
    pub fn new(chain: Arc<dyn ChainSource>, resolver: Arc<SignatureResolver>) -> Self {
        Self {
            spec: ToolSpec {
                name: "tx_fetch",
                description: "Fetch any transaction by hash and return its decoded, simplified form (call, events, trace).",
                args: Schema::new().required("tx_hash", TypeTag::String),
                side_effects: SideEffects::ReadOnly,
            },
            chain,
            resolver,
        }
    }
}

#[async_trait]
impl Tool for TxFetchTool {
    fn spec(&self) -> &ToolSpec {
        &self.spec
    }

    async fn call(&self, args: &Value) -> Result<ToolOutput, ToolError> {
        let hash: TxHash = str_arg("tx_fetch", args, "tx_hash")?
            .parse()
            .map_err(|e| bad_arg("tx_fetch", e))?;
        let bundle = self.chain.fetch_bundle(&hash).await?;
        let decoded = decode_bundle(&bundle, &self.resolver, EventDb::builtin()).await;
        let ctx = simplify_for_llm(&bundle, &decoded);
        Ok(ToolOutput::new(
            format!("tx {hash}\n{}", ctx.text),
            Some(format!("{}/{hash}", self.chain.describe())),
        ))
    }
}

pub struct SigLookupTool {
    spec: ToolSpec,
    resolver: Arc<SignatureResolver>,
}

impl SigLookupTool {
    pub fn new(resolver: Arc<SignatureResolver>) -> Self {
        Self {
            spec: ToolSpec {
                name: "sig_lookup",
                description: "Resolve a 4-byte function selector to candidate signatures, optionally scoped to a contract.",
                args: Schema::new()
                    .required("selector", TypeTag::String)
                    .optional("contract", TypeTag::String),
                side_effects: SideEffects::ReadOnly,
            },
            resolver,
        }
    }
}

#[async_trait]
impl Tool for SigLookupTool {
    fn spec(&self) -> &ToolSpec {
        &self.spec
    }

    async fn call(&self, args: &Value) -> Result<ToolOutput, ToolError> {
        let selector: Selector = str_arg("sig_lookup", args, "selector")?
            .parse()
            .map_err(|e| bad_arg("sig_lookup", e))?;
        let contract: Option<Address> = match args.get("contract").and_then(Value::as_str) {
            Some(c) => Some(c.parse().map_err(|e| bad_arg("sig_lookup", e))?),
            None => None,
        };
        let (candidates, warning) = self.resolver.resolve_selector(&selector, contract.as_ref()).await;
        let mut lines: Vec<String> = candidates
            .iter()
            .map(|c| format!("{selector}: {} [{}]", c.signature.canonical(), c.source.as_str()))
            .collect();
        if lines.is_empty() {
            lines.push(format!("{selector}: no known signature"));
        }
        if let Some(w) = warning {
            lines.push(format!("note: {w}"));
        }
        Ok(ToolOutput::new(lines.join("\n"), Some(format!("signatures/{selector}"))))
    }
}
