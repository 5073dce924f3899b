#![allow(dead_code)]

pub mod oracles;
pub mod standin;

use std::path::PathBuf;

use intent_core::workflow::{AblationFlag, RunConfig};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Hash of a named fixture transaction.
pub fn named(name: &str) -> String {
    let text = std::fs::read_to_string(fixtures().join("named.json")).unwrap();
    let map: serde_json::Value = serde_json::from_str(&text).unwrap();
    map[name].as_str().unwrap_or_else(|| panic!("no fixture named {name}")).to_string()
}

/// Offline config: chain, web, price and history fixtures plus a mock script.
pub fn mock_config(script: &str) -> RunConfig {
    let f = fixtures();
    RunConfig {
        rpc_endpoint: format!("fixture:{}", f.join("chain").display()),
        mock_script: Some(f.join("scripts").join(format!("{script}.json"))),
        web_fixtures: Some(f.join("web")),
        price_fixtures: Some(f.join("prices.json")),
        history_fixtures: Some(f.join("history.json")),
        ..RunConfig::default()
    }
}

pub fn with_flags(mut cfg: RunConfig, flags: &[AblationFlag]) -> RunConfig {
    for f in flags {
        cfg.ablation.insert(*f);
    }
    cfg
}

use intent_core::chaindata::{
    decode_bundle, simplify_for_llm, ChainSource, DecodedTx, EventDb, FixtureChainSource, SignatureResolver,
    SimplifiedContext, TxHash,
};
use intent_core::tokens::estimate_tokens;

/// Raw RPC keys that must never reach the model.
pub const BLACKLIST: &[&str] = &[
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
];

pub struct Simplified {
    pub hash: TxHash,
    pub raw: serde_json::Value,
    pub raw_tokens: usize,
    pub decoded: DecodedTx,
    pub context: SimplifiedContext,
}

/// Every committed capture, fetched, decoded and simplified.
pub async fn simplify_all() -> Vec<Simplified> {
    let dir = fixtures().join("chain");
    let source = FixtureChainSource::new(&dir);
    let resolver = SignatureResolver::default();
    let mut paths: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    paths.sort();
    let mut out = Vec::new();
    for path in paths {
        let hash: TxHash = path.file_stem().unwrap().to_str().unwrap().parse().unwrap();
        let raw = source.raw_capture(&hash).await.unwrap();
        let bundle = source.fetch_bundle(&hash).await.unwrap();
        let decoded = decode_bundle(&bundle, &resolver, EventDb::builtin()).await;
        let context = simplify_for_llm(&bundle, &decoded);
        out.push(Simplified {
            hash,
            raw_tokens: estimate_tokens(&serde_json::to_string(&raw).unwrap()),
            raw,
            decoded,
            context,
        });
    }
    out
}

/// Blacklisted keys present anywhere in `v`.
pub fn blacklisted_keys(v: &serde_json::Value) -> Vec<String> {
    let mut found = Vec::new();
    match v {
        serde_json::Value::Object(map) => {
            for (k, child) in map {
                if BLACKLIST.contains(&k.as_str()) {
                    found.push(k.clone());
                }
                found.extend(blacklisted_keys(child));
            }
        }
        serde_json::Value::Array(items) => items.iter().for_each(|c| found.extend(blacklisted_keys(c))),
        _ => {}
    }
    found
}

/// Long hex values stored under blacklisted keys in the raw capture.
pub fn blacklisted_values(raw: &serde_json::Value) -> Vec<String> {
    let mut out = Vec::new();
    match raw {
        serde_json::Value::Object(map) => {
            for (k, child) in map {
                match child.as_str() {
                    Some(s) if BLACKLIST.contains(&k.as_str()) && s.len() > 10 => out.push(s.to_string()),
                    _ => out.extend(blacklisted_values(child)),
                }
            }
        }
        serde_json::Value::Array(items) => items.iter().for_each(|c| out.extend(blacklisted_values(c))),
        _ => {}
    }
    out
}
