//! Solidity ABI type grammar and head/tail decoding.
//!
//! Elementary types, `bytes`, `string` and arrays decode fully. Tuples are
//! located correctly (so surrounding arguments still decode) but their
//! contents are kept as a raw byte slice.

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use thiserror::Error;

use super::types::Address;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignatureError {
    #[error("malformed signature {text:?}: {reason}")]
    Malformed { text: String, reason: String },
}

fn malformed(text: &str, reason: impl Into<String>) -> SignatureError {
    SignatureError::Malformed {
        text: text.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("payload truncated: need {need} bytes at offset {offset}, have {have}")]
    Truncated { offset: usize, need: usize, have: usize },
    #[error("offset {0} points outside the payload")]
    BadOffset(String),
    #[error("value at offset {offset} does not fit {ty}")]
    OutOfRange { offset: usize, ty: String },
    #[error("input shorter than a 4-byte selector")]
    MissingSelector,
    #[error("selector {actual} does not match signature {signature} ({expected})")]
    SelectorMismatch { expected: String, actual: String, signature: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AbiType {
    Address,
    Bool,
    Uint(u16),
    Int(u16),
    FixedBytes(u8),
    Bytes,
    String,
    Array(Box<AbiType>),
    FixedArray(Box<AbiType>, usize),
    Tuple(Vec<AbiType>),
}

impl AbiType {
    /// Parses a type. `strict` rejects aliases (`uint`, `int`) that are not
    /// valid in a canonical signature.
    pub fn parse(text: &str, strict: bool) -> Result<Self, SignatureError> {
        let text = text.trim();
        let (base_end, mut ty) = if text.starts_with('(') {
            let close = matching_paren(text, 0).ok_or_else(|| malformed(text, "unbalanced parentheses"))?;
            let inner = &text[1..close];
            let members = if inner.trim().is_empty() {
                Vec::new()
            } else {
                split_top_level(inner)
                    .into_iter()
                    .map(|m| AbiType::parse(m, strict))
                    .collect::<Result<Vec<_>, _>>()?
            };
            (close + 1, AbiType::Tuple(members))
        } else {
            let end = text.find('[').unwrap_or(text.len());
            (end, Self::parse_elementary(&text[..end], strict).ok_or_else(|| malformed(text, "unknown type"))?)
        };
        let mut rest = &text[base_end..];
        while !rest.is_empty() {
            let close = rest.find(']').ok_or_else(|| malformed(text, "unterminated array suffix"))?;
            if !rest.starts_with('[') {
                return Err(malformed(text, "unexpected characters after type"));
            }
            let len = &rest[1..close];
            ty = if len.is_empty() {
                AbiType::Array(Box::new(ty))
            } else {
                let n: usize = len.parse().map_err(|_| malformed(text, "bad array length"))?;
                if n == 0 || len.starts_with('0') {
                    return Err(malformed(text, "bad array length"));
                }
                AbiType::FixedArray(Box::new(ty), n)
            };
            rest = &rest[close + 1..];
        }
        Ok(ty)
    }

    fn parse_elementary(text: &str, strict: bool) -> Option<Self> {
        match text {
            "address" => return Some(Self::Address),
            "bool" => return Some(Self::Bool),
            "string" => return Some(Self::String),
            "bytes" => return Some(Self::Bytes),
            "uint" if !strict => return Some(Self::Uint(256)),
            "int" if !strict => return Some(Self::Int(256)),
            _ => {}
        }
        let sized = |digits: &str| -> Option<u16> {
            if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            digits.parse().ok()
        };
        if let Some(d) = text.strip_prefix("uint") {
            let bits = sized(d)?;
            return (bits % 8 == 0 && (8..=256).contains(&bits)).then_some(Self::Uint(bits));
        }
        if let Some(d) = text.strip_prefix("int") {
            let bits = sized(d)?;
            return (bits % 8 == 0 && (8..=256).contains(&bits)).then_some(Self::Int(bits));
        }
        if let Some(d) = text.strip_prefix("bytes") {
            let n = sized(d)?;
            return (1..=32).contains(&n).then_some(Self::FixedBytes(n as u8));
        }
        None
    }

    pub fn is_dynamic(&self) -> bool {
        match self {
            Self::Bytes | Self::String | Self::Array(_) => true,
            Self::FixedArray(inner, _) => inner.is_dynamic(),
            Self::Tuple(members) => members.iter().any(AbiType::is_dynamic),
            _ => false,
        }
    }

    /// Bytes this type occupies in the head of an enclosing tuple.
    pub fn head_size(&self) -> usize {
        if self.is_dynamic() {
            return 32;
        }
        match self {
            Self::FixedArray(inner, n) => inner.head_size() * n,
            Self::Tuple(members) => members.iter().map(AbiType::head_size).sum(),
            _ => 32,
        }
    }
}

impl fmt::Display for AbiType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Address => f.write_str("address"),
            Self::Bool => f.write_str("bool"),
            Self::Uint(b) => write!(f, "uint{b}"),
            Self::Int(b) => write!(f, "int{b}"),
            Self::FixedBytes(n) => write!(f, "bytes{n}"),
            Self::Bytes => f.write_str("bytes"),
            Self::String => f.write_str("string"),
            Self::Array(inner) => write!(f, "{inner}[]"),
            Self::FixedArray(inner, n) => write!(f, "{inner}[{n}]"),
            Self::Tuple(members) => {
                f.write_str("(")?;
                for (i, m) in members.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{m}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn matching_paren(text: &str, open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (i, c) in text.char_indices().skip(open) {
        match c {
            '(' => depth += 1,
            ')' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn split_top_level(text: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&text[start..]);
    parts
}

fn is_identifier(text: &str) -> bool {
    let mut chars = text.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_' || c == '$')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$')
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: Option<String>,
    pub ty: AbiType,
    pub indexed: bool,
}

/// A function or event signature, optionally carrying parameter names and
/// `indexed` markers (`Transfer(address indexed from,address indexed to,uint256 value)`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub name: String,
    pub params: Vec<Param>,
}

impl Signature {
    /// Accepts the human-readable form with names and `indexed` markers.
    pub fn parse(text: &str) -> Result<Self, SignatureError> {
        Self::parse_inner(text, false)
    }

    /// Accepts only canonical text: no whitespace, no names, no aliases.
    pub fn parse_canonical(text: &str) -> Result<Self, SignatureError> {
        if text.chars().any(char::is_whitespace) {
            return Err(malformed(text, "canonical signatures contain no whitespace"));
        }
        let sig = Self::parse_inner(text, true)?;
        if sig.params.iter().any(|p| p.name.is_some() || p.indexed) {
            return Err(malformed(text, "canonical signatures carry no parameter names"));
        }
        Ok(sig)
    }

    fn parse_inner(text: &str, strict: bool) -> Result<Self, SignatureError> {
        let text_trimmed = text.trim();
        if text_trimmed.is_empty() {
            return Err(malformed(text, "empty signature"));
        }
        let open = text_trimmed.find('(').ok_or_else(|| malformed(text, "missing parameter list"))?;
        let name = &text_trimmed[..open];
        if !is_identifier(name) {
            return Err(malformed(text, "invalid function name"));
        }
        let close = matching_paren(text_trimmed, open).ok_or_else(|| malformed(text, "unbalanced parentheses"))?;
        if close != text_trimmed.len() - 1 {
            return Err(malformed(text, "trailing characters after parameter list"));
        }
        let inner = &text_trimmed[open + 1..close];
        let mut params = Vec::new();
        if !inner.trim().is_empty() {
            for raw in split_top_level(inner) {
                params.push(parse_param(raw, strict).map_err(|e| match e {
                    SignatureError::Malformed { reason, .. } => malformed(text, reason),
                })?);
            }
        }
        Ok(Self {
            name: name.to_string(),
            params,
        })
    }

    pub fn canonical(&self) -> String {
        let types: Vec<String> = self.params.iter().map(|p| p.ty.to_string()).collect();
        format!("{}({})", self.name, types.join(","))
    }

    pub fn types(&self) -> Vec<AbiType> {
        self.params.iter().map(|p| p.ty.clone()).collect()
    }
}

fn parse_param(raw: &str, strict: bool) -> Result<Param, SignatureError> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(malformed(raw, "empty parameter"));
    }
    // The type ends at the first space outside parentheses.
    let mut depth = 0i32;
    let mut split = raw.len();
    for (i, c) in raw.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ' ' if depth == 0 => {
                split = i;
                break;
            }
            _ => {}
        }
    }
    let ty = AbiType::parse(&raw[..split], strict)?;
    let mut indexed = false;
    let mut name = None;
    for word in raw[split..].split_whitespace() {
        match word {
            "indexed" if !indexed && name.is_none() => indexed = true,
            "memory" | "calldata" | "storage" | "payable" => {}
            w if name.is_none() && is_identifier(w) => name = Some(w.to_string()),
            _ => return Err(malformed(raw, "unexpected token in parameter")),
        }
    }
    Ok(Param { name, ty, indexed })
}

/// Decoded ABI value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AbiValue {
    Address(Address),
    Bool(bool),
    Uint(BigUint),
    Int(BigInt),
    FixedBytes(Vec<u8>),
    Bytes(Vec<u8>),
    String(String),
    Array(Vec<AbiValue>),
    /// Tuple contents left undecoded.
    RawTuple { ty: String, bytes: Vec<u8> },
}

impl AbiValue {
    /// Renders the value; byte strings longer than `max_bytes` are elided.
    pub fn render(&self, max_bytes: Option<usize>) -> String {
        let hex_of = |b: &[u8]| match max_bytes {
            Some(limit) if b.len() > limit => {
                format!("0x{}..({} bytes)", hex::encode(&b[..limit]), b.len())
            }
            _ => format!("0x{}", hex::encode(b)),
        };
        match self {
            Self::Address(a) => a.to_string(),
            Self::Bool(b) => b.to_string(),
            Self::Uint(v) => v.to_string(),
            Self::Int(v) => v.to_string(),
            Self::FixedBytes(b) | Self::Bytes(b) => hex_of(b),
            Self::String(s) => serde_json::to_string(s).expect("strings serialize"),
            Self::Array(items) => {
                let inner: Vec<String> = items.iter().map(|v| v.render(max_bytes)).collect();
                format!("[{}]", inner.join(", "))
            }
            Self::RawTuple { ty, bytes } => format!("raw tuple {ty} {}", hex_of(bytes)),
        }
    }
}

impl fmt::Display for AbiValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(None))
    }
}

fn word(data: &[u8], offset: usize) -> Result<&[u8], DecodeError> {
    data.get(offset..offset.checked_add(32).unwrap_or(usize::MAX))
        .ok_or(DecodeError::Truncated {
            offset,
            need: 32,
            have: data.len().saturating_sub(offset),
        })
}

fn word_as_usize(data: &[u8], offset: usize) -> Result<usize, DecodeError> {
    let w = word(data, offset)?;
    if w[..24].iter().any(|b| *b != 0) {
        return Err(DecodeError::BadOffset(format!("0x{}", hex::encode(w))));
    }
    let v = u64::from_be_bytes(w[24..].try_into().expect("8 bytes"));
    usize::try_from(v).map_err(|_| DecodeError::BadOffset(v.to_string()))
}

/// Decodes `types` as a tuple encoded at the start of `data`.
pub fn decode_params(types: &[AbiType], data: &[u8]) -> Result<Vec<AbiValue>, DecodeError> {
    decode_sequence(types, data, 0)
}

fn decode_sequence(types: &[AbiType], data: &[u8], base: usize) -> Result<Vec<AbiValue>, DecodeError> {
    let mut head = base;
    let mut out = Vec::with_capacity(types.len());
    for ty in types {
        if ty.is_dynamic() {
            let rel = word_as_usize(data, head)?;
            let target = base
                .checked_add(rel)
                .filter(|t| *t <= data.len())
                .ok_or_else(|| DecodeError::BadOffset(rel.to_string()))?;
            out.push(decode_value(ty, data, target)?);
            head += 32;
        } else {
            out.push(decode_value(ty, data, head)?);
            head += ty.head_size();
        }
    }
    Ok(out)
}

fn out_of_range(offset: usize, ty: &AbiType) -> DecodeError {
    DecodeError::OutOfRange {
        offset,
        ty: ty.to_string(),
    }
}

fn decode_value(ty: &AbiType, data: &[u8], pos: usize) -> Result<AbiValue, DecodeError> {
    match ty {
        AbiType::Address => {
            let w = word(data, pos)?;
            if w[..12].iter().any(|b| *b != 0) {
                return Err(out_of_range(pos, ty));
            }
            Ok(AbiValue::Address(Address(w[12..].try_into().expect("20 bytes"))))
        }
        AbiType::Bool => {
            let w = word(data, pos)?;
            if w[..31].iter().any(|b| *b != 0) || w[31] > 1 {
                return Err(out_of_range(pos, ty));
            }
            Ok(AbiValue::Bool(w[31] == 1))
        }
        AbiType::Uint(bits) => {
            let w = word(data, pos)?;
            let v = BigUint::from_bytes_be(w);
            if v.bits() > u64::from(*bits) {
                return Err(out_of_range(pos, ty));
            }
            Ok(AbiValue::Uint(v))
        }
        AbiType::Int(bits) => {
            let w = word(data, pos)?;
            let negative = w[0] & 0x80 != 0;
            let unused = 32 - usize::from(*bits) / 8;
            let fill = if negative { 0xff } else { 0x00 };
            if w[..unused].iter().any(|b| *b != fill) {
                return Err(out_of_range(pos, ty));
            }
            // sign bit of the declared width must agree with the extension
            if unused > 0 && (w[unused] & 0x80 != 0) != negative {
                return Err(out_of_range(pos, ty));
            }
            let v = if negative {
                let inverted: Vec<u8> = w.iter().map(|b| !b).collect();
                -(BigInt::from_bytes_be(Sign::Plus, &inverted) + BigInt::from(1u8))
            } else {
                BigInt::from_bytes_be(Sign::Plus, w)
            };
            Ok(AbiValue::Int(v))
        }
        AbiType::FixedBytes(n) => {
            let w = word(data, pos)?;
            let n = usize::from(*n);
            if w[n..].iter().any(|b| *b != 0) {
                return Err(out_of_range(pos, ty));
            }
            Ok(AbiValue::FixedBytes(w[..n].to_vec()))
        }
        AbiType::Bytes | AbiType::String => {
            let len = word_as_usize(data, pos)?;
            let start = pos + 32;
            let bytes = start
                .checked_add(len)
                .and_then(|end| data.get(start..end))
                .ok_or(DecodeError::Truncated {
                    offset: start,
                    need: len,
                    have: data.len().saturating_sub(start),
                })?;
            Ok(if matches!(ty, AbiType::String) {
                AbiValue::String(String::from_utf8_lossy(bytes).into_owned())
            } else {
                AbiValue::Bytes(bytes.to_vec())
            })
        }
        AbiType::Array(inner) => {
            let len = word_as_usize(data, pos)?;
            let start = pos + 32;
            // each element takes at least one head word
            if len.saturating_mul(32) > data.len().saturating_sub(start) {
                return Err(DecodeError::Truncated {
                    offset: start,
                    need: len.saturating_mul(32),
                    have: data.len().saturating_sub(start),
                });
            }
            let types = vec![(**inner).clone(); len];
            decode_sequence(&types, data, start).map(AbiValue::Array)
        }
        AbiType::FixedArray(inner, n) => {
            let types = vec![(**inner).clone(); *n];
            decode_sequence(&types, data, pos).map(AbiValue::Array)
        }
        AbiType::Tuple(_) => {
            let end = if ty.is_dynamic() {
                data.len()
            } else {
                pos + ty.head_size()
            };
            let bytes = data.get(pos..end).ok_or(DecodeError::Truncated {
                offset: pos,
                need: end.saturating_sub(pos),
                have: data.len().saturating_sub(pos),
            })?;
            Ok(AbiValue::RawTuple {
                ty: ty.to_string(),
                bytes: bytes.to_vec(),
            })
        }
    }
}
