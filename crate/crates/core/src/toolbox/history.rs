use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use async_trait::async_trait;
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{http_client, str_arg, SideEffects, Tool, ToolError, ToolOutput, ToolSpec};
use crate::chaindata::{Address, Wei};
use crate::llm::{Schema, TypeTag};

pub const DEFAULT_HISTORY_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub hash: String,
    pub block_number: u64,
    pub from: String,
    pub to: Option<String>,
    /// Wei, decimal.
    pub value: String,
    pub method: Option<String>,
}

impl HistoryEntry {
    fn render(&self, subject: &str) -> String {
        let outgoing = self.from.eq_ignore_ascii_case(subject);
        let (direction, counterparty) = if outgoing {
            ("out", self.to.as_deref().unwrap_or("contract creation"))
        } else {
            ("in", self.from.as_str())
        };
        let value = self
            .value
            .parse::<BigUint>()
            .map_or_else(|_| self.value.clone(), |v| Wei(v).to_eth_string());
        format!(
            "block {} {} {direction} {counterparty} value={value} ETH method={}",
            self.block_number,
            self.hash,
            self.method.as_deref().unwrap_or("-")
        )
    }
}

#[derive(Deserialize)]
struct HistoryFile {
    addresses: HashMap<String, Vec<HistoryEntry>>,
}

pub enum HistoryProvider {
    /// Keyed by lowercase address.
    Fixture(HashMap<String, Vec<HistoryEntry>>),
    /// GET `url_template` with `{address}` substituted, answering with a
    /// JSON array of entries. Plain JSON-RPC has no per-address index, so
    /// live history needs an indexer behind this.
    Http { client: reqwest::Client, url_template: String },
    None,
}

impl HistoryProvider {
    pub fn fixture_file(path: &Path) -> Result<Self, ToolError> {
        let text = std::fs::read_to_string(path).map_err(|e| ToolError::Unavailable(format!("{}: {e}", path.display())))?;
        let file: HistoryFile =
            serde_json::from_str(&text).map_err(|e| ToolError::Unavailable(format!("{}: {e}", path.display())))?;
        Ok(Self::Fixture(
            file.addresses.into_iter().map(|(k, v)| (k.to_ascii_lowercase(), v)).collect(),
        ))
    }

    pub fn http(url_template: impl Into<String>, timeout: Duration) -> Result<Self, ToolError> {
        Ok(Self::Http {
            client: http_client(timeout)?,
            url_template: url_template.into(),
        })
    }

    async fn entries(&self, address: &str) -> Result<Vec<HistoryEntry>, String> {
        match self {
            HistoryProvider::Fixture(map) => Ok(map.get(address).cloned().unwrap_or_default()),
            HistoryProvider::Http { client, url_template } => {
                let url = url_template.replace("{address}", address);
                let resp = client.get(&url).send().await.map_err(|e| e.to_string())?;
                if !resp.status().is_success() {
                    return Err(format!("history provider returned {}", resp.status().as_u16()));
                }
                resp.json().await.map_err(|e| e.to_string())
            }
            HistoryProvider::None => Err("no history provider configured".into()),
        }
    }
}

pub struct AddressHistoryTool {
    spec: ToolSpec,
    provider: HistoryProvider,
    default_limit: usize,
}

impl AddressHistoryTool {
    pub fn new(provider: HistoryProvider, default_limit: usize) -> Self {
        Self {
            spec: ToolSpec {
                name: "address_history",
                description: "List the most recent transactions of an address: block, hash, direction, counterparty, value and method.",
                args: Schema::new()
                    .required("address", TypeTag::String)
                    .optional("limit", TypeTag::Integer),
                side_effects: SideEffects::ReadOnly,
            },
            provider,
            default_limit: default_limit.max(1),
        }
    }

    /// Newest first, at most `limit` lines.
    pub async fn history(&self, address: &str, limit: Option<usize>) -> Result<ToolOutput, ToolError> {
        let parsed: Address = address.parse().map_err(|e| ToolError::InvalidArgs {
            tool: "address_history".into(),
            message: format!("{e}"),
        })?;
        let key = parsed.to_string();
        let limit = limit.unwrap_or(self.default_limit).max(1);
        let text = match self.provider.entries(&key).await {
            Err(reason) => format!("address history unavailable: {reason}"),
            Ok(entries) if entries.is_empty() => format!("{key}: no prior activity"),
            Ok(mut entries) => {
                entries.sort_by(|a, b| b.block_number.cmp(&a.block_number).then_with(|| a.hash.cmp(&b.hash)));
                entries.iter().take(limit).map(|e| e.render(&key)).collect::<Vec<_>>().join("\n")
            }
        };
        Ok(ToolOutput::new(text, Some(format!("history/{key}"))))
    }
}

#[async_trait]
impl Tool for AddressHistoryTool {
    fn spec(&self) -> &ToolSpec {
        &self.spec
    }

    async fn call(&self, args: &Value) -> Result<ToolOutput, ToolError> {
        let address = str_arg("address_history", args, "address")?;
        let limit = args.get("limit").and_then(Value::as_u64).map(|n| n as usize);
        self.history(address, limit).await
    }
}
