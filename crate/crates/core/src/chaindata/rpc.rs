use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use async_trait::async_trait;
use serde_json::{json, Value};

use super::types::{parse_quantity, Address, Bytes, CallFrame, LogEntry, TxBundle, TxHash, Wei, Word};
use super::{ChainError, ChainSource, RpcErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt` (1-based): base, 2*base, 4*base...
    pub fn delay(&self, attempt: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(attempt.saturating_sub(1))
    }
}

fn malformed(what: &str) -> ChainError {
    ChainError::Malformed(what.to_string())
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a str, ChainError> {
    v.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| malformed(&format!("missing field {key}")))
}

fn quantity(v: &Value, key: &str) -> Result<u64, ChainError> {
    parse_quantity(field(v, key)?).map_err(|e| malformed(&format!("{key}: {e}")))
}

fn wei(v: &Value, key: &str) -> Result<Wei, ChainError> {
    match v.get(key).and_then(Value::as_str) {
        Some(text) => Wei::from_quantity(text).map_err(|e| malformed(&format!("{key}: {e}"))),
        None => Ok(Wei::default()),
    }
}

fn address(v: &Value, key: &str) -> Result<Address, ChainError> {
    field(v, key)?.parse().map_err(|e| malformed(&format!("{key}: {e}")))
}

fn opt_address(v: &Value, key: &str) -> Result<Option<Address>, ChainError> {
    match v.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(_) => address(v, key).map(Some),
    }
}

fn bytes(v: &Value, key: &str) -> Result<Bytes, ChainError> {
    match v.get(key).and_then(Value::as_str) {
        Some(text) => text.parse().map_err(|e| malformed(&format!("{key}: {e}"))),
        None => Ok(Bytes::default()),
    }
}

fn flatten_frames(frame: &Value, depth: u32, out: &mut Vec<CallFrame>) -> Result<(), ChainError> {
    out.push(CallFrame {
        depth,
        call_type: field(frame, "type")?.to_ascii_uppercase(),
        from: address(frame, "from")?,
        to: opt_address(frame, "to")?,
        value: wei(frame, "value")?,
        input: bytes(frame, "input")?,
    });
    if let Some(children) = frame.get("calls").and_then(Value::as_array) {
        for child in children {
            flatten_frames(child, depth + 1, out)?;
        }
    }
    Ok(())
}

/// Builds a bundle from raw JSON-RPC objects: transaction, receipt, optional
/// block header and optional callTracer frame.
pub fn bundle_from_raw(
    tx: &Value,
    receipt: &Value,
    block: Option<&Value>,
    trace: Option<&Value>,
) -> Result<TxBundle, ChainError> {
    let logs = receipt
        .get("logs")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed("receipt without logs array"))?
        .iter()
        .map(|log| {
            let topics = log
                .get("topics")
                .and_then(Value::as_array)
                .ok_or_else(|| malformed("log without topics"))?
                .iter()
                .map(|t| {
                    t.as_str()
                        .ok_or_else(|| malformed("non-string topic"))?
                        .parse::<Word>()
                        .map_err(|e| malformed(&format!("topic: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(LogEntry {
                address: address(log, "address")?,
                topics,
                data: bytes(log, "data")?,
            })
        })
        .collect::<Result<Vec<_>, ChainError>>()?;

    let trace = match trace {
        Some(frame) if !frame.is_null() => {
            let mut frames = Vec::new();
            flatten_frames(frame, 0, &mut frames)?;
            Some(frames)
        }
        _ => None,
    };
    let gas_price = match tx.get("gasPrice") {
        Some(Value::String(_)) => wei(tx, "gasPrice")?,
        _ => wei(receipt, "effectiveGasPrice")?,
    };
    let status = match receipt.get("status").and_then(Value::as_str) {
        Some(s) => Some(parse_quantity(s).map_err(|e| malformed(&format!("status: {e}")))? == 1),
        None => None,
    };
    let block_timestamp = match block {
        Some(b) if !b.is_null() => Some(quantity(b, "timestamp")?),
        _ => None,
    };

    Ok(TxBundle {
        tx_hash: field(tx, "hash")?.parse().map_err(|e| malformed(&format!("hash: {e}")))?,
        from: address(tx, "from")?,
        to: opt_address(tx, "to")?,
        value: wei(tx, "value")?,
        nonce: quantity(tx, "nonce")?,
        block_number: quantity(tx, "blockNumber")?,
        block_timestamp,
        transaction_index: quantity(tx, "transactionIndex")?,
        gas: quantity(tx, "gas")?,
        gas_used: quantity(receipt, "gasUsed")?,
        gas_price,
        status,
        input: bytes(tx, "input")?,
        receipt_logs: logs,
        trace_degraded: trace.is_none(),
        trace,
    })
}

/// Ethereum JSON-RPC over HTTP.
pub struct JsonRpcClient {
    url: String,
    http: reqwest::Client,
    retry: RetryPolicy,
    next_id: AtomicU64,
}

impl JsonRpcClient {
    pub fn new(url: impl Into<String>, timeout: Duration, retry: RetryPolicy) -> Result<Self, ChainError> {
        let http = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ChainError::rpc(RpcErrorKind::Transport, e.to_string()))?;
        Ok(Self {
            url: url.into(),
            http,
            retry,
            next_id: AtomicU64::new(1),
        })
    }

    async fn call_once(&self, method: &str, params: &Value) -> Result<Value, ChainError> {
        let body = json!({
            "jsonrpc": "2.0",
            "id": self.next_id.fetch_add(1, Ordering::Relaxed),
            "method": method,
            "params": params,
        });
        let response = self.http.post(&self.url).json(&body).send().await.map_err(|e| {
            let kind = if e.is_timeout() {
                RpcErrorKind::Timeout
            } else {
                RpcErrorKind::Transport
            };
            ChainError::rpc(kind, format!("{method}: {e}"))
        })?;
        let status = response.status();
        if !status.is_success() {
            return Err(ChainError::rpc(RpcErrorKind::Http(status.as_u16()), method.to_string()));
        }
        let mut reply: Value = response
            .json()
            .await
            .map_err(|e| ChainError::rpc(RpcErrorKind::Transport, format!("{method}: {e}")))?;
        if let Some(err) = reply.get("error") {
            let code = err.get("code").and_then(Value::as_i64).unwrap_or(0);
            let message = err.get("message").and_then(Value::as_str).unwrap_or("").to_string();
            return Err(ChainError::rpc(RpcErrorKind::Endpoint(code), format!("{method}: {message}")));
        }
        Ok(reply.get_mut("result").map(Value::take).unwrap_or(Value::Null))
    }

    /// Calls `method`, retrying transient failures per the retry policy.
    pub async fn call(&self, method: &str, params: Value) -> Result<Value, ChainError> {
        let mut attempt = 1;
        loop {
            match self.call_once(method, &params).await {
                Err(e) if e.is_transient() && attempt < self.retry.attempts => {
                    tracing::debug!(method, attempt, error = %e, "retrying rpc call");
                    tokio::time::sleep(self.retry.delay(attempt)).await;
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    /// Hashes of up to `n` transactions from the latest block.
    pub async fn latest_transactions(&self, n: usize) -> Result<Vec<TxHash>, ChainError> {
        let block = self.call("eth_getBlockByNumber", json!(["latest", false])).await?;
        let txs = block
            .get("transactions")
            .and_then(Value::as_array)
            .ok_or_else(|| malformed("block without transactions"))?;
        txs.iter()
            .take(n)
            .map(|t| {
                t.as_str()
                    .ok_or_else(|| malformed("non-string transaction hash"))?
                    .parse()
                    .map_err(ChainError::from)
            })
            .collect()
    }
}

#[async_trait]
impl ChainSource for JsonRpcClient {
    async fn fetch_bundle(&self, tx_hash: &TxHash) -> Result<TxBundle, ChainError> {
        let hash = tx_hash.to_string();
        let tx = self.call("eth_getTransactionByHash", json!([hash])).await?;
        if tx.is_null() {
            return Err(ChainError::NotFound(*tx_hash));
        }
        let receipt = self.call("eth_getTransactionReceipt", json!([hash])).await?;
        if receipt.is_null() {
            // pending transactions have no receipt yet
            return Err(ChainError::NotFound(*tx_hash));
        }
        let block_number = field(&tx, "blockNumber")?.to_string();
        let block = match self.call("eth_getBlockByNumber", json!([block_number, false])).await {
            Ok(b) => Some(b),
            Err(e) => {
                tracing::warn!(error = %e, "block header unavailable; timestamp absent");
                None
            }
        };
        let trace = match self
            .call("debug_traceTransaction", json!([hash, {"tracer": "callTracer"}]))
            .await
        {
            Ok(t) => Some(t),
            Err(e) => {
                tracing::warn!(error = %e, "trace unavailable; continuing without trace");
                None
            }
        };
        bundle_from_raw(&tx, &receipt, block.as_ref(), trace.as_ref())
    }

    fn describe(&self) -> String {
        format!("json-rpc {}", self.url)
    }
}

/// Reads recorded captures (`<dir>/<tx_hash>.json` holding
/// `{transaction, receipt, block, trace}`).
pub struct FixtureChainSource {
    dir: PathBuf,
}

impl FixtureChainSource {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn capture_path(&self, tx_hash: &TxHash) -> PathBuf {
        self.dir.join(format!("{tx_hash}.json"))
    }

    /// The capture exactly as recorded.
    pub async fn raw_capture(&self, tx_hash: &TxHash) -> Result<Value, ChainError> {
        let path = self.capture_path(tx_hash);
        let text = match tokio::fs::read_to_string(&path).await {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(ChainError::NotFound(*tx_hash)),
            Err(e) => return Err(ChainError::Io(format!("{}: {e}", path.display()))),
        };
        serde_json::from_str(&text).map_err(|e| ChainError::Malformed(format!("{}: {e}", path.display())))
    }
}

#[async_trait]
impl ChainSource for FixtureChainSource {
    async fn fetch_bundle(&self, tx_hash: &TxHash) -> Result<TxBundle, ChainError> {
        let raw = self.raw_capture(tx_hash).await?;
        let tx = raw.get("transaction").ok_or_else(|| malformed("capture without transaction"))?;
        let receipt = raw.get("receipt").ok_or_else(|| malformed("capture without receipt"))?;
        bundle_from_raw(tx, receipt, raw.get("block"), raw.get("trace"))
    }

    fn describe(&self) -> String {
        format!("fixture {}", self.dir.display())
    }
}
