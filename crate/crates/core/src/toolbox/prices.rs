use std::path::Path;
use std::time::Duration;

use async_trait::async_trait;
use chrono::{TimeZone, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{http_client, str_arg, SideEffects, Tool, ToolError, ToolOutput, ToolSpec};
use crate::llm::{Schema, TypeTag};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quote {
    pub symbol: String,
    #[serde(default)]
    pub address: Option<String>,
    /// Decimal string, kept verbatim.
    pub price: String,
    pub currency: String,
    /// Unix seconds.
    pub as_of: i64,
}

impl Quote {
    fn matches(&self, asset: &str) -> bool {
        self.symbol.eq_ignore_ascii_case(asset) || self.address.as_deref().is_some_and(|a| a.eq_ignore_ascii_case(asset))
    }

    pub fn render(&self) -> String {
        let when = Utc
            .timestamp_opt(self.as_of, 0)
            .single()
            .map_or_else(|| self.as_of.to_string(), |t| t.format("%Y-%m-%dT%H:%M:%SZ").to_string());
        format!("{} = {} {} at {when}", self.symbol, self.price, self.currency)
    }
}

#[derive(Deserialize)]
struct QuoteFile {
    quotes: Vec<Quote>,
}

/// Price provider failures that the model should see rather than abort on.
enum Lookup {
    Found(Quote, Option<String>),
    Degraded(String),
}

pub enum PriceProvider {
    /// Exact quotes from a committed file. The quote at or before the
    /// requested time wins.
    Fixture(Vec<Quote>),
    /// GET `url_template` with `{asset}` and `{timestamp}` substituted,
    /// answering with a JSON quote object; 404 means unknown asset.
    Http { client: reqwest::Client, url_template: String },
    None,
}

impl PriceProvider {
    pub fn fixture_file(path: &Path) -> Result<Self, ToolError> {
        let text = std::fs::read_to_string(path).map_err(|e| ToolError::Unavailable(format!("{}: {e}", path.display())))?;
        let file: QuoteFile =
            serde_json::from_str(&text).map_err(|e| ToolError::Unavailable(format!("{}: {e}", path.display())))?;
        Ok(Self::Fixture(file.quotes))
    }

    pub fn http(url_template: impl Into<String>, timeout: Duration) -> Result<Self, ToolError> {
        Ok(Self::Http {
            client: http_client(timeout)?,
            url_template: url_template.into(),
        })
    }

    async fn lookup(&self, asset: &str, timestamp: Option<i64>) -> Result<Lookup, ToolError> {
        match self {
            PriceProvider::Fixture(quotes) => {
                let mut candidates: Vec<&Quote> = quotes.iter().filter(|q| q.matches(asset)).collect();
                if candidates.is_empty() {
                    return Err(ToolError::UnknownAsset(asset.to_string()));
                }
                candidates.sort_by_key(|q| q.as_of);
                let Some(ts) = timestamp else {
                    return Ok(Lookup::Found(candidates[candidates.len() - 1].clone(), None));
                };
                match candidates.iter().rev().find(|q| q.as_of <= ts) {
                    Some(q) => Ok(Lookup::Found((*q).clone(), None)),
                    None => Ok(Lookup::Found(
                        candidates[0].clone(),
                        Some("no quote at or before the requested time; showing the earliest".into()),
                    )),
                }
            }
            PriceProvider::Http { client, url_template } => {
                let url = url_template
                    .replace("{asset}", asset)
                    .replace("{timestamp}", &timestamp.map(|t| t.to_string()).unwrap_or_default());
                let resp = match client.get(&url).send().await {
                    Ok(r) => r,
                    Err(e) if e.is_timeout() => return Ok(Lookup::Degraded("timeout".into())),
                    Err(e) => return Ok(Lookup::Degraded(e.to_string())),
                };
                if resp.status() == reqwest::StatusCode::NOT_FOUND {
                    return Err(ToolError::UnknownAsset(asset.to_string()));
                }
                if !resp.status().is_success() {
                    return Ok(Lookup::Degraded(format!("provider returned {}", resp.status().as_u16())));
                }
                match resp.json::<Quote>().await {
                    Ok(q) => Ok(Lookup::Found(q, None)),
                    Err(e) => Ok(Lookup::Degraded(format!("unreadable provider response: {e}"))),
                }
            }
            PriceProvider::None => Ok(Lookup::Degraded("no price provider configured".into())),
        }
    }
}

pub struct PriceLookupTool {
    spec: ToolSpec,
    provider: PriceProvider,
}

impl PriceLookupTool {
    pub fn new(provider: PriceProvider) -> Self {
        Self {
            spec: ToolSpec {
                name: "price_lookup",
                description: "Look up a token price by symbol or contract address, optionally at a unix timestamp.",
                args: Schema::new()
                    .required("asset", TypeTag::String)
                    .optional("timestamp", TypeTag::Integer),
                side_effects: SideEffects::ReadOnly,
            },
            provider,
        }
    }

    pub async fn price(&self, asset: &str, timestamp: Option<i64>) -> Result<ToolOutput, ToolError> {
        let source = match &self.provider {
            PriceProvider::Fixture(_) => "fixture:prices",
            PriceProvider::Http { .. } | PriceProvider::None => "price-provider",
        };
        let text = match self.provider.lookup(asset, timestamp).await? {
            Lookup::Found(q, None) => q.render(),
            Lookup::Found(q, Some(note)) => format!("{} ({note})", q.render()),
            Lookup::Degraded(reason) => format!("price unavailable: {reason}"),
        };
        Ok(ToolOutput::new(text, Some(format!("{source}/{asset}"))))
    }
}

#[async_trait]
impl Tool for PriceLookupTool {
    fn spec(&self) -> &ToolSpec {
        &self.spec
    }

    async fn call(&self, args: &Value) -> Result<ToolOutput, ToolError> {
        let asset = str_arg("price_lookup", args, "asset")?;
        self.price(asset, args.get("timestamp").and_then(Value::as_i64)).await
    }
}
