//! On-chain data access: fetching, caching, decoding and the compact
//! rendering handed to the agents.

pub mod abi;
pub mod cache;
pub mod decode;
pub mod rpc;
pub mod selector;
pub mod signatures;
pub mod simplify;
pub mod types;

use std::fmt;
use std::sync::Arc;

use async_trait::async_trait;
use thiserror::Error;

pub use abi::{AbiType, AbiValue, DecodeError, Signature, SignatureError};
pub use cache::{BundleCache, CachedSource};
pub use decode::{decode_calldata, decode_log, Confidence, DecodedCall, DecodedEvent, LogView};
pub use rpc::{FixtureChainSource, JsonRpcClient, RetryPolicy};
pub use selector::{compute_selector, compute_topic, keccak256};
pub use signatures::{AbiRegistry, EventDb, LocalTable, RemoteDirectory, SignatureCandidate, SignatureResolver, SignatureSource};
pub use simplify::{decode_bundle, simplify_for_llm, DecodedTx, SimplifiedContext};
pub use types::{Address, Bytes, CallFrame, HexError, LogEntry, Selector, TxBundle, TxHash, Wei, Word};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RpcErrorKind {
    Transport,
    Timeout,
    Http(u16),
    /// JSON-RPC error object returned by the node.
    Endpoint(i64),
}

impl fmt::Display for RpcErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Transport => f.write_str("transport"),
            Self::Timeout => f.write_str("timeout"),
            Self::Http(code) => write!(f, "http {code}"),
            Self::Endpoint(code) => write!(f, "endpoint error {code}"),
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum ChainError {
    #[error("invalid transaction hash: {0}")]
    InvalidHash(#[from] HexError),
    #[error("rpc error ({kind}): {message}")]
    Rpc { kind: RpcErrorKind, message: String },
    #[error("transaction {0} not found")]
    NotFound(TxHash),
    #[error("malformed chain data: {0}")]
    Malformed(String),
    #[error("cache i/o: {0}")]
    Io(String),
}

impl ChainError {
    pub fn rpc(kind: RpcErrorKind, message: impl Into<String>) -> Self {
        Self::Rpc {
            kind,
            message: message.into(),
        }
    }

    /// Worth another attempt: transport trouble, timeouts, 429 and 5xx.
    pub fn is_transient(&self) -> bool {
        match self {
            Self::Rpc { kind, .. } => match kind {
                RpcErrorKind::Transport | RpcErrorKind::Timeout => true,
                RpcErrorKind::Http(code) => *code == 429 || *code >= 500,
                RpcErrorKind::Endpoint(_) => false,
            },
            _ => false,
        }
    }
}

/// Anything that can produce a bundle for a transaction hash.
#[async_trait]
pub trait ChainSource: Send + Sync {
    async fn fetch_bundle(&self, tx_hash: &TxHash) -> Result<TxBundle, ChainError>;

    /// Short label for logs and transcripts.
    fn describe(&self) -> String;
}

#[async_trait]
impl<T: ChainSource + ?Sized> ChainSource for Arc<T> {
    async fn fetch_bundle(&self, tx_hash: &TxHash) -> Result<TxBundle, ChainError> {
        (**self).fetch_bundle(tx_hash).await
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// Parses the hash and fetches through `source`.
pub async fn fetch_bundle(tx_hash: &str, source: &dyn ChainSource) -> Result<TxBundle, ChainError> {
    let hash: TxHash = tx_hash.parse()?;
    source.fetch_bundle(&hash).await
}
