//! Compact, model-readable rendering of a transaction.
//!
//! Only the human-meaningful parts survive: parties, value, gas facts, the
//! decoded call, decoded events and a one-line-per-frame call tree. Every
//! address is listed once in an address book and referenced as `@n`
//! elsewhere, including the sender and recipient.

use chrono::{TimeZone, Utc};
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use super::decode::{decode_log, decode_with_candidates, DecodedCall, LogView};
use super::signatures::{EventDb, SignatureResolver};
use super::types::{format_units, Address, Selector, TxBundle};
use crate::tokens::estimate_tokens;

/// Raw RPC fields never carried into the simplified context.
pub const REMOVED_FIELDS: &[&str] = &[
    "hash (given alongside the context)",
    "logsBloom",
    "stateRoot",
    "receiptsRoot",
    "transactionsRoot",
    "parentHash",
    "blockHash",
    "miner",
    "v",
    "r",
    "s",
    "yParity",
    "accessList",
    "cumulativeGasUsed",
    "logIndex",
    "removed",
    "input (raw hex)",
    "trace gas and output",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimplifiedContext {
    pub text: String,
    pub token_estimate: usize,
    pub removed_fields: Vec<String>,
}

/// Decoding results for a bundle.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DecodedTx {
    /// `None` for plain transfers and contract creation.
    pub call: Option<DecodedCall>,
    pub logs: Vec<LogView>,
    /// Parallel to `TxBundle::trace_or_pseudo()`.
    pub frames: Vec<Option<DecodedCall>>,
    pub warnings: Vec<String>,
}

impl DecodedTx {
    pub fn decoded_call_count(&self) -> usize {
        usize::from(self.call.as_ref().is_some_and(|c| c.method_name().is_some()))
    }
}

pub async fn decode_bundle(bundle: &TxBundle, resolver: &SignatureResolver, events: &EventDb) -> DecodedTx {
    let mut out = DecodedTx::default();
    let decode_input = |input: &[u8], contract: Option<Address>| {
        let selector = Selector(input.get(..4)?.try_into().ok()?);
        Some((selector, input.to_vec(), contract))
    };
    let top = if bundle.to.is_some() {
        decode_input(&bundle.input.0, bundle.to)
    } else {
        None
    };
    if let Some((selector, input, contract)) = top {
        let (candidates, warning) = resolver.resolve_selector(&selector, contract.as_ref()).await;
        out.warnings.extend(warning);
        out.call = decode_with_candidates(&input, &candidates);
    }
    for frame in bundle.trace_or_pseudo() {
        let decoded = match decode_input(&frame.input.0, frame.to) {
            Some(_) if frame.to.is_none() => None,
            Some((selector, input, contract)) => {
                let (candidates, warning) = resolver.resolve_selector(&selector, contract.as_ref()).await;
                if let Some(w) = warning {
                    if !out.warnings.contains(&w) {
                        out.warnings.push(w);
                    }
                }
                decode_with_candidates(&input, &candidates)
            }
            None => None,
        };
        out.frames.push(decoded);
    }
    out.logs = bundle.receipt_logs.iter().map(|l| decode_log(l, events)).collect();
    out
}

/// Addresses in first-appearance order.
#[derive(Default)]
struct AddressBook(Vec<String>);

impl AddressBook {
    fn alias(&mut self, address: &str) -> String {
        let idx = match self.0.iter().position(|a| a == address) {
            Some(i) => i,
            None => {
                self.0.push(address.to_string());
                self.0.len() - 1
            }
        };
        format!("@{}", idx + 1)
    }

    /// Replaces every standalone 20-byte hex literal with its alias.
    fn rewrite(&mut self, text: &str) -> String {
        let bytes = text.as_bytes();
        let mut out = String::with_capacity(text.len());
        let mut i = 0;
        while i < bytes.len() {
            let boundary_before = i == 0 || !bytes[i - 1].is_ascii_alphanumeric();
            if boundary_before && bytes[i..].starts_with(b"0x") && i + 42 <= bytes.len() {
                let body = &bytes[i + 2..i + 42];
                let boundary_after = bytes.get(i + 42).is_none_or(|b| !b.is_ascii_hexdigit());
                if body.iter().all(u8::is_ascii_hexdigit) && boundary_after {
                    out.push_str(&self.alias(&text[i..i + 42].to_ascii_lowercase()));
                    i += 42;
                    continue;
                }
            }
            let ch = text[i..].chars().next().expect("char boundary");
            out.push(ch);
            i += ch.len_utf8();
        }
        out
    }
}

impl Serialize for AddressBook {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (i, a) in self.0.iter().enumerate() {
            map.serialize_entry(&format!("@{}", i + 1), a)?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct GasView {
    limit: u64,
    used: u64,
    price_gwei: String,
}

#[derive(Serialize)]
struct TxView {
    block: u64,
    time: Option<String>,
    index: u64,
    nonce: u64,
    status: &'static str,
    from: String,
    to: String,
    value: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    value_wei: Option<String>,
    gas: GasView,
}

#[derive(Serialize)]
struct View {
    tx: TxView,
    call: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    decoding: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
    events: Vec<String>,
    trace: Vec<String>,
    addresses: AddressBook,
}

fn frame_method(call: Option<&DecodedCall>, input_len: usize) -> String {
    match call {
        Some(c) => c.method_name().map_or_else(|| c.selector.to_string(), str::to_string),
        None if input_len == 0 => "transfer".to_string(),
        None => "create".to_string(),
    }
}

pub fn simplify_for_llm(bundle: &TxBundle, decoded: &DecodedTx) -> SimplifiedContext {
    let mut book = AddressBook::default();
    let from = book.alias(&bundle.from.to_string());
    let to = match bundle.to {
        Some(a) => book.alias(&a.to_string()),
        None => "contract creation".to_string(),
    };

    let (call, decoding) = if bundle.to.is_none() {
        (format!("contract creation ({} bytes init code)", bundle.input.len()), None)
    } else if bundle.is_plain_transfer() {
        ("native ETH transfer".to_string(), None)
    } else {
        match &decoded.call {
            Some(c) => (book.rewrite(&c.render_line()), Some(c.confidence.as_str().to_string())),
            None => ("undecodable input".to_string(), None),
        }
    };
    let notes = decoded.call.as_ref().map(|c| c.notes.clone()).unwrap_or_default();

    let events: Vec<String> = decoded.logs.iter().map(|l| book.rewrite(&l.render_line())).collect();

    let mut trace = Vec::new();
    // an absent trace is reported as such rather than faked from the top-level call
    let frames = bundle.trace.as_deref().unwrap_or_default();
    for (i, frame) in frames.iter().enumerate() {
        let method = frame_method(decoded.frames.get(i).and_then(Option::as_ref), frame.input.len());
        let target = frame.to.map_or_else(|| "new contract".to_string(), |a| a.to_string());
        let mut line = format!("[{}] {} {} -> {} {}", frame.depth, frame.call_type, frame.from, target, method);
        if !frame.value.is_zero() {
            line.push_str(&format!(" value={} ETH", frame.value.to_eth_string()));
        }
        trace.push(book.rewrite(&line));
    }
    if bundle.trace.is_none() {
        trace.push("unavailable".to_string());
    }

    let view = View {
        tx: TxView {
            block: bundle.block_number,
            time: bundle
                .block_timestamp
                .and_then(|t| Utc.timestamp_opt(t as i64, 0).single())
                .map(|t| t.format("%Y-%m-%dT%H:%M:%SZ").to_string()),
            index: bundle.transaction_index,
            nonce: bundle.nonce,
            status: match bundle.status {
                Some(true) => "success",
                Some(false) => "reverted",
                None => "unknown",
            },
            from,
            to,
            value: format!("{} ETH", bundle.value.to_eth_string()),
            value_wei: (!bundle.value.is_zero()).then(|| bundle.value.to_string()),
            gas: GasView {
                limit: bundle.gas,
                used: bundle.gas_used,
                price_gwei: format_units(&bundle.gas_price.0, 9, 3),
            },
        },
        call,
        decoding,
        notes,
        events,
        trace,
        addresses: book,
    };
    let text = serde_json::to_string(&view).expect("view serializes");
    SimplifiedContext {
        token_estimate: estimate_tokens(&text),
        text,
        removed_fields: REMOVED_FIELDS.iter().map(|s| s.to_string()).collect(),
    }
}
