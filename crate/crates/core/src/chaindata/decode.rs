use serde::{Deserialize, Serialize};

use super::abi::{decode_params, AbiType, AbiValue, DecodeError, Signature};
use super::selector::selector_of_canonical;
use super::signatures::{EventDb, SignatureCandidate, SignatureSource};
use super::types::{Address, LogEntry, Selector, Word};

/// Byte strings longer than this are elided in rendered values.
const RENDER_BYTES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Confidence {
    ExactAbi,
    SignatureDb,
    Unresolved,
}

impl Confidence {
    pub fn as_str(&self) -> &'static str {
        match self {
            Confidence::ExactAbi => "exact-abi",
            Confidence::SignatureDb => "signature-db",
            Confidence::Unresolved => "unresolved",
        }
    }
}

impl From<SignatureSource> for Confidence {
    fn from(source: SignatureSource) -> Self {
        match source {
            SignatureSource::AbiRegistry => Confidence::ExactAbi,
            SignatureSource::Local | SignatureSource::Remote => Confidence::SignatureDb,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodedArg {
    /// Declared parameter name, or `argN`.
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodedCall {
    pub selector: Selector,
    /// Canonical signature; empty when unresolved.
    pub signature: String,
    pub args: Vec<DecodedArg>,
    pub confidence: Confidence,
    /// Argument payload as hex when unresolved.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl DecodedCall {
    pub fn method_name(&self) -> Option<&str> {
        self.signature.split('(').next().filter(|n| !n.is_empty())
    }

    /// `name(arg=value,...)`, or `0xselector(<N bytes>)` when unresolved.
    pub fn render_line(&self) -> String {
        match self.method_name() {
            Some(name) => {
                let args: Vec<String> = self.args.iter().map(|a| format!("{}={}", a.name, a.value)).collect();
                format!("{name}({})", args.join(", "))
            }
            None => {
                let len = self.raw.as_deref().map_or(0, |r| r.len().saturating_sub(2) / 2);
                format!("{}(<{len} bytes, unresolved>)", self.selector)
            }
        }
    }
}

fn name_args(sig: &Signature, values: Vec<AbiValue>, notes: &mut Vec<String>) -> Vec<DecodedArg> {
    sig.params
        .iter()
        .zip(values)
        .enumerate()
        .map(|(i, (param, value))| {
            if matches!(value, AbiValue::RawTuple { .. }) && !notes.iter().any(|n| n.starts_with("tuple")) {
                notes.push("tuple arguments are shown as raw hex".to_string());
            }
            DecodedArg {
                name: param.name.clone().unwrap_or_else(|| format!("arg{i}")),
                ty: param.ty.to_string(),
                value: value.render(Some(RENDER_BYTES)),
            }
        })
        .collect()
}

/// Decodes `input` (selector + payload) against one signature.
pub fn decode_calldata(input: &[u8], signature: &Signature, confidence: Confidence) -> Result<DecodedCall, DecodeError> {
    if input.len() < 4 {
        return Err(DecodeError::MissingSelector);
    }
    let selector = Selector(input[..4].try_into().expect("4 bytes"));
    let canonical = signature.canonical();
    let expected = selector_of_canonical(&canonical);
    if expected != selector {
        return Err(DecodeError::SelectorMismatch {
            expected: expected.to_string(),
            actual: selector.to_string(),
            signature: canonical,
        });
    }
    let values = decode_params(&signature.types(), &input[4..])?;
    let mut notes = Vec::new();
    let args = name_args(signature, values, &mut notes);
    Ok(DecodedCall {
        selector,
        signature: canonical,
        args,
        confidence,
        raw: None,
        notes,
    })
}

pub fn unresolved_call(input: &[u8]) -> Option<DecodedCall> {
    let selector = Selector(input.get(..4)?.try_into().ok()?);
    Some(DecodedCall {
        selector,
        signature: String::new(),
        args: Vec::new(),
        confidence: Confidence::Unresolved,
        raw: Some(format!("0x{}", hex::encode(&input[4..]))),
        notes: Vec::new(),
    })
}

/// Tries candidates in order; the first that decodes cleanly wins. Falls back
/// to an unresolved call carrying the raw payload. `None` for empty input.
pub fn decode_with_candidates(input: &[u8], candidates: &[SignatureCandidate]) -> Option<DecodedCall> {
    if input.is_empty() {
        return None;
    }
    let mut rejected = Vec::new();
    for candidate in candidates {
        match decode_calldata(input, &candidate.signature, candidate.source.into()) {
            Ok(call) => return Some(call),
            Err(e) => rejected.push(format!("{} rejected: {e}", candidate.signature.canonical())),
        }
    }
    let mut call = unresolved_call(input)?;
    call.notes = rejected;
    Some(call)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodedEvent {
    pub address: Address,
    pub name: String,
    pub signature: String,
    pub params: Vec<DecodedArg>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogView {
    Decoded(DecodedEvent),
    Raw {
        address: Address,
        topic0: Option<Word>,
        topic_count: usize,
        data_len: usize,
        data_preview: String,
    },
}

fn raw_log(log: &LogEntry) -> LogView {
    let preview = &log.data.0[..log.data.len().min(32)];
    LogView::Raw {
        address: log.address,
        topic0: log.topics.first().copied(),
        topic_count: log.topics.len(),
        data_len: log.data.len(),
        data_preview: format!("0x{}", hex::encode(preview)),
    }
}

fn decode_indexed(ty: &AbiType, topic: &Word) -> Option<String> {
    if ty.is_dynamic() || matches!(ty, AbiType::Tuple(_) | AbiType::FixedArray(..)) {
        // indexed reference types are stored as their hash
        return Some(format!("hash {topic}"));
    }
    decode_params(std::slice::from_ref(ty), &topic.0)
        .ok()
        .map(|v| v[0].render(Some(RENDER_BYTES)))
}

fn try_event(log: &LogEntry, sig: &Signature) -> Option<DecodedEvent> {
    let indexed = sig.params.iter().filter(|p| p.indexed).count();
    if indexed + 1 != log.topics.len() {
        return None;
    }
    let body_types: Vec<AbiType> = sig.params.iter().filter(|p| !p.indexed).map(|p| p.ty.clone()).collect();
    let mut body = decode_params(&body_types, &log.data.0).ok()?.into_iter();
    let mut topics = log.topics[1..].iter();
    let mut params = Vec::with_capacity(sig.params.len());
    for (i, p) in sig.params.iter().enumerate() {
        let value = if p.indexed {
            decode_indexed(&p.ty, topics.next()?)?
        } else {
            body.next()?.render(Some(RENDER_BYTES))
        };
        params.push(DecodedArg {
            name: p.name.clone().unwrap_or_else(|| format!("arg{i}")),
            ty: p.ty.to_string(),
            value,
        });
    }
    Some(DecodedEvent {
        address: log.address,
        name: sig.name.clone(),
        signature: sig.canonical(),
        params,
    })
}

pub fn decode_log(log: &LogEntry, db: &EventDb) -> LogView {
    let Some(topic0) = log.topics.first() else {
        return raw_log(log);
    };
    db.lookup(topic0)
        .iter()
        .find_map(|sig| try_event(log, sig))
        .map_or_else(|| raw_log(log), LogView::Decoded)
}

impl LogView {
    pub fn render_line(&self) -> String {
        match self {
            LogView::Decoded(e) => {
                let args: Vec<String> = e.params.iter().map(|a| format!("{}={}", a.name, a.value)).collect();
                format!("{} {}({})", e.address, e.name, args.join(", "))
            }
            LogView::Raw {
                address,
                topic0,
                topic_count,
                data_len,
                ..
            } => match topic0 {
                Some(t) => format!("{address} unknown event topic0={t} topics={topic_count} data={data_len} bytes"),
                None => format!("{address} anonymous log data={data_len} bytes"),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaindata::types::Bytes;

    fn word_addr(a: &Address) -> Word {
        let mut w = [0u8; 32];
        w[12..].copy_from_slice(&a.0);
        Word(w)
    }

    #[test]
    fn transfer_call() {
        let to = Address([0x11; 20]);
        let mut input = hex::decode("a9059cbb").unwrap();
        input.extend(word_addr(&to).0);
        let mut amount = [0u8; 32];
        amount[24..].copy_from_slice(&1_000_000_000_000_000_000u64.to_be_bytes());
        input.extend(amount);
        let sig = Signature::parse("transfer(address to,uint256 value)").unwrap();
        let call = decode_calldata(&input, &sig, Confidence::SignatureDb).unwrap();
        assert_eq!(
            call.render_line(),
            format!("transfer(to={to}, value=1000000000000000000)")
        );
        assert!(decode_calldata(&input[..40], &sig, Confidence::SignatureDb).is_err());
    }

    #[test]
    fn zero_arg_call() {
        let sig = Signature::parse("deposit()").unwrap();
        let input = selector_of_canonical("deposit()").0;
        let call = decode_calldata(&input, &sig, Confidence::SignatureDb).unwrap();
        assert!(call.args.is_empty());
    }

    #[test]
    fn unresolved_fallback_keeps_payload() {
        let call = decode_with_candidates(&[0xde, 0xad, 0xbe, 0xef, 1, 2], &[]).unwrap();
        assert_eq!(call.confidence, Confidence::Unresolved);
        assert_eq!(call.raw.as_deref(), Some("0x0102"));
        assert!(decode_with_candidates(&[], &[]).is_none());
    }

    #[test]
    fn zero_topic_log_is_raw() {
        let log = LogEntry {
            address: Address([1; 20]),
            topics: vec![],
            data: Bytes(vec![1, 2, 3]),
        };
        assert!(matches!(decode_log(&log, EventDb::builtin()), LogView::Raw { .. }));
    }

    #[test]
    fn erc721_transfer_picks_the_right_variant() {
        let topic0 = Word(crate::chaindata::selector::keccak256(b"Transfer(address,address,uint256)"));
        let mut id = [0u8; 32];
        id[31] = 9;
        let log = LogEntry {
            address: Address([1; 20]),
            topics: vec![topic0, word_addr(&Address([2; 20])), word_addr(&Address([3; 20])), Word(id)],
            data: Bytes(vec![]),
        };
        let LogView::Decoded(e) = decode_log(&log, EventDb::builtin()) else {
            panic!("expected decoded event");
        };
        assert_eq!(e.params[2].name, "tokenId");
        assert_eq!(e.params[2].value, "9");
    }
}
