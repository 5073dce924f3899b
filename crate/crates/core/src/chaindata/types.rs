use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HexError {
    #[error("missing 0x prefix in {0:?}")]
    MissingPrefix(String),
    #[error("expected {expected} bytes, got {actual} in {text:?}")]
    WrongWidth { expected: usize, actual: usize, text: String },
    #[error("invalid hex in {0:?}")]
    InvalidHex(String),
    #[error("invalid quantity {0:?}")]
    InvalidQuantity(String),
}

pub(crate) fn strip_0x(text: &str) -> Result<&str, HexError> {
    text.strip_prefix("0x")
        .or_else(|| text.strip_prefix("0X"))
        .ok_or_else(|| HexError::MissingPrefix(text.to_string()))
}

pub(crate) fn decode_hex(text: &str) -> Result<Vec<u8>, HexError> {
    let body = strip_0x(text)?;
    hex::decode(body).map_err(|_| HexError::InvalidHex(text.to_string()))
}

fn decode_fixed<const N: usize>(text: &str) -> Result<[u8; N], HexError> {
    let bytes = decode_hex(text)?;
    bytes.as_slice().try_into().map_err(|_| HexError::WrongWidth {
        expected: N,
        actual: bytes.len(),
        text: text.to_string(),
    })
}

/// Parses a JSON-RPC quantity (`"0x1a"`) into a `u64`.
pub fn parse_quantity(text: &str) -> Result<u64, HexError> {
    let body = strip_0x(text)?;
    if body.is_empty() {
        return Err(HexError::InvalidQuantity(text.to_string()));
    }
    u64::from_str_radix(body, 16).map_err(|_| HexError::InvalidQuantity(text.to_string()))
}

macro_rules! fixed_hex {
    ($(#[$meta:meta])* $name:ident, $len:expr) => {
        $(#[$meta])*
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub [u8; $len]);

        impl $name {
            pub const LEN: usize = $len;

            pub fn as_bytes(&self) -> &[u8; $len] {
                &self.0
            }
        }

        impl FromStr for $name {
            type Err = HexError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                decode_fixed::<$len>(s.trim()).map(Self)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "0x{}", hex::encode(self.0))
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({self})", stringify!($name))
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

fixed_hex!(
    /// 32-byte transaction hash, rendered as lowercase `0x` hex.
    TxHash,
    32
);
fixed_hex!(
    /// 20-byte account address.
    Address,
    20
);
fixed_hex!(
    /// 32-byte word (log topics, storage words).
    Word,
    32
);
fixed_hex!(
    /// 4-byte function selector.
    Selector,
    4
);

impl Word {
    /// The low 20 bytes if the high 12 are zero.
    pub fn as_address(&self) -> Option<Address> {
        if self.0[..12].iter().all(|b| *b == 0) {
            let mut out = [0u8; 20];
            out.copy_from_slice(&self.0[12..]);
            Some(Address(out))
        } else {
            None
        }
    }
}

/// Arbitrary byte string, serialized as `0x` hex.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Bytes(pub Vec<u8>);

impl Bytes {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Bytes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(&self.0))
    }
}

impl fmt::Debug for Bytes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bytes({self})")
    }
}

impl FromStr for Bytes {
    type Err = HexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        decode_hex(s.trim()).map(Self)
    }
}

impl Serialize for Bytes {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bytes {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Unsigned 256-bit amount in wei, serialized as a decimal string.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Wei(pub BigUint);

impl Wei {
    pub fn from_quantity(text: &str) -> Result<Self, HexError> {
        let body = strip_0x(text)?;
        if body.is_empty() || body.len() > 64 {
            return Err(HexError::InvalidQuantity(text.to_string()));
        }
        BigUint::parse_bytes(body.as_bytes(), 16)
            .map(Self)
            .ok_or_else(|| HexError::InvalidQuantity(text.to_string()))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Fixed-point rendering with six decimals, truncating (`1.234567 ETH`).
    pub fn to_eth_string(&self) -> String {
        format_units(&self.0, 18, 6)
    }
}

impl From<u64> for Wei {
    fn from(v: u64) -> Self {
        Self(BigUint::from(v))
    }
}

impl fmt::Display for Wei {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for Wei {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Wei({})", self.0)
    }
}

impl Serialize for Wei {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Wei {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        BigUint::parse_bytes(s.as_bytes(), 10)
            .map(Wei)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid decimal amount {s:?}")))
    }
}

/// Renders `amount / 10^decimals` with `places` fractional digits (truncating).
pub fn format_units(amount: &BigUint, decimals: u32, places: u32) -> String {
    let base = BigUint::from(10u32).pow(decimals);
    let whole = amount / &base;
    let frac = amount % &base;
    let scaled = frac / BigUint::from(10u32).pow(decimals.saturating_sub(places));
    format!("{whole}.{scaled:0>width$}", width = places as usize)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub address: Address,
    pub topics: Vec<Word>,
    pub data: Bytes,
}

/// One internal call frame; `depth` 0 is the top-level call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallFrame {
    pub depth: u32,
    pub call_type: String,
    pub from: Address,
    pub to: Option<Address>,
    pub value: Wei,
    pub input: Bytes,
}

/// Everything fetched for one transaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxBundle {
    pub tx_hash: TxHash,
    pub from: Address,
    /// `None` for contract creation.
    pub to: Option<Address>,
    pub value: Wei,
    pub nonce: u64,
    pub block_number: u64,
    pub block_timestamp: Option<u64>,
    pub transaction_index: u64,
    /// Gas limit supplied with the transaction.
    pub gas: u64,
    /// Gas actually consumed, from the receipt.
    pub gas_used: u64,
    pub gas_price: Wei,
    pub status: Option<bool>,
    pub input: Bytes,
    pub receipt_logs: Vec<LogEntry>,
    /// Flattened call tree; `None` when the endpoint has no trace support.
    pub trace: Option<Vec<CallFrame>>,
    /// Set when tracing was unavailable and the trace is absent.
    pub trace_degraded: bool,
}

impl TxBundle {
    pub fn is_plain_transfer(&self) -> bool {
        self.input.is_empty()
    }

    pub fn selector(&self) -> Option<Selector> {
        let head: [u8; 4] = self.input.0.get(..4)?.try_into().ok()?;
        Some(Selector(head))
    }

    /// The recorded trace, or a single frame rebuilt from the top-level call.
    pub fn trace_or_pseudo(&self) -> Vec<CallFrame> {
        match &self.trace {
            Some(frames) => frames.clone(),
            None => vec![CallFrame {
                depth: 0,
                call_type: if self.to.is_some() { "CALL" } else { "CREATE" }.to_string(),
                from: self.from,
                to: self.to,
                value: self.value.clone(),
                input: self.input.clone(),
            }],
        }
    }

    pub fn trace_length(&self) -> usize {
        self.trace.as_ref().map_or(0, Vec::len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_requires_exact_width() {
        assert!(matches!(
            "0x123".parse::<TxHash>(),
            Err(HexError::WrongWidth { .. }) | Err(HexError::InvalidHex(_))
        ));
        assert!(matches!("1234".parse::<TxHash>(), Err(HexError::MissingPrefix(_))));
        let ok = format!("0x{}", "AB".repeat(32));
        assert_eq!(ok.parse::<TxHash>().unwrap().to_string(), format!("0x{}", "ab".repeat(32)));
    }

    #[test]
    fn eth_rendering_truncates_to_six_places() {
        assert_eq!(Wei::from(500_000_000_000_000_000).to_eth_string(), "0.500000");
        assert_eq!(Wei::from(1_234_567_890_123_456_789).to_eth_string(), "1.234567");
        assert_eq!(Wei::from(0).to_eth_string(), "0.000000");
    }

    #[test]
    fn quantities() {
        assert_eq!(parse_quantity("0x1a").unwrap(), 26);
        assert!(parse_quantity("0x").is_err());
        let max = format!("0x{}", "f".repeat(64));
        assert_eq!(Wei::from_quantity(&max).unwrap().0.bits(), 256);
        assert!(Wei::from_quantity(&format!("0x1{}", "0".repeat(64))).is_err());
    }

    #[test]
    fn word_to_address() {
        let w: Word = format!("0x{}{}", "00".repeat(12), "11".repeat(20)).parse().unwrap();
        assert_eq!(w.as_address().unwrap().to_string(), format!("0x{}", "11".repeat(20)));
        let w: Word = format!("0x{}", "11".repeat(32)).parse().unwrap();
        assert!(w.as_address().is_none());
    }
}
