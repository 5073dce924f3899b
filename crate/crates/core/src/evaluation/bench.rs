use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::metrics::{score, MetricsReport, Predictions};
use super::LabeledExample;
use crate::agents::PromptStyle;
use crate::taxonomy::IntentSet;
use crate::workflow::{AblationFlag, Engine, RunConfig, WorkflowError};

pub const RESULTS_SCHEMA_VERSION: u32 = 1;

/// One row of the comparison: a display name and the config behind it.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub method: String,
    pub config: RunConfig,
}

/// Names accepted by [`named_configs`]: `full` (or `baseline`), `langgpt`,
/// and any `+`-joined set of `no_mp`, `no_de`, `no_qs`, `no_ce`.
pub fn named_config(base: &RunConfig, name: &str) -> Result<BenchConfig, String> {
    let name = name.trim();
    let mut config = base.clone();
    let method = match name {
        "full" | "baseline" => "full".to_string(),
        "langgpt" => {
            config.prompt_style = PromptStyle::LangGpt;
            "w/ LangGPT".to_string()
        }
        _ => {
            let mut labels = Vec::new();
            for part in name.split('+') {
                let flag: AblationFlag = part.parse()?;
                config.ablation.insert(flag);
                labels.push(flag.as_str().trim_start_matches("no_").to_ascii_uppercase());
            }
            format!("w/o {}", labels.join("+"))
        }
    };
    Ok(BenchConfig { method, config })
}

pub fn named_configs(base: &RunConfig, names: &[&str]) -> Result<Vec<BenchConfig>, String> {
    names.iter().map(|n| named_config(base, n)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct CachedPrediction {
    tx_hash: String,
    config_digest: String,
    accepted: IntentSet,
}

/// Predictions keyed by (transaction, config digest), in memory and
/// optionally on disk, so ablation sweeps and reruns skip finished work.
/// Only successful runs are cached.
#[derive(Default)]
pub struct PredictionCache {
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<(String, String), IntentSet>>,
}

impl PredictionCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn on_disk(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: Some(dir.into()),
            memory: Mutex::default(),
        }
    }

    fn path(&self, tx_hash: &str, digest: &str) -> Option<PathBuf> {
        self.dir
            .as_ref()
            .map(|d| d.join(format!("{}-{tx_hash}.json", &digest[..16.min(digest.len())])))
    }

    pub fn get(&self, tx_hash: &str, digest: &str) -> Option<IntentSet> {
        let key = (tx_hash.to_string(), digest.to_string());
        if let Some(hit) = self.memory.lock().expect("cache lock").get(&key) {
            return Some(hit.clone());
        }
        let text = std::fs::read_to_string(self.path(tx_hash, digest)?).ok()?;
        let cached: CachedPrediction = serde_json::from_str(&text).ok()?;
        // a truncated-digest collision must not serve someone else's entry
        if cached.config_digest != digest || cached.tx_hash != tx_hash {
            return None;
        }
        self.memory.lock().expect("cache lock").insert(key, cached.accepted.clone());
        Some(cached.accepted)
    }

    pub fn put(&self, tx_hash: &str, digest: &str, accepted: &IntentSet) -> std::io::Result<()> {
        self.memory
            .lock()
            .expect("cache lock")
            .insert((tx_hash.to_string(), digest.to_string()), accepted.clone());
        if let Some(path) = self.path(tx_hash, digest) {
            std::fs::create_dir_all(path.parent().expect("cache file has a parent"))?;
            let entry = CachedPrediction {
                tx_hash: tx_hash.to_string(),
                config_digest: digest.to_string(),
                accepted: accepted.clone(),
            };
            std::fs::write(path, serde_json::to_string(&entry).expect("entry serializes"))?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.memory.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleFailure {
    pub tx_hash: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub method: String,
    pub config_digest: String,
    pub metrics: MetricsReport,
    pub predictions: Predictions,
    pub failures: Vec<ExampleFailure>,
    pub cache_hits: usize,
    #[serde(skip)]
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkTable {
    pub examples: usize,
    pub rows: Vec<BenchRow>,
}

impl BenchmarkTable {
    /// True when no row produced a single prediction.
    pub fn all_failed(&self) -> bool {
        self.rows.iter().all(|r| r.failures.len() == self.examples)
    }

    /// Aligned text, one row per config: Method, Recall, Precision, F1-micro.
    pub fn render(&self) -> String {
        let rows: Vec<[String; 4]> = self
            .rows
            .iter()
            .map(|r| {
                let m = &r.metrics.micro;
                [r.method.clone(), fmt2(m.recall), fmt2(m.precision), fmt2(m.f1)]
            })
            .collect();
        align(["Method", "Recall", "Precision", "F1-micro"], &rows)
    }

    /// Per-intent breakdown of one row: Intent Code, Recall, Precision,
    /// F1-micro.
    pub fn render_per_intent(&self, row: usize) -> String {
        let rows: Vec<[String; 4]> = self.rows[row]
            .metrics
            .per_intent
            .iter()
            .map(|(code, m)| [code.to_string(), fmt2(m.recall), fmt2(m.precision), fmt2(m.f1)])
            .collect();
        align(["Intent Code", "Recall", "Precision", "F1-micro"], &rows)
    }

    /// The machine-readable results document.
    pub fn to_results_json(&self, dataset: &str) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let per_intent: Vec<Value> = r
                    .metrics
                    .per_intent
                    .iter()
                    .map(|(code, m)| {
                        json!({
                            "code": code,
                            "recall": m.recall,
                            "precision": m.precision,
                            "f1_micro": m.f1,
                            "support": m.support,
                        })
                    })
                    .collect();
                let ablation: Vec<&str> = r.config.ablation.flags().map(AblationFlag::as_str).collect();
                json!({
                    "method": r.method,
                    "recall": r.metrics.micro.recall,
                    "precision": r.metrics.micro.precision,
                    "f1_micro": r.metrics.micro.f1,
                    "counts": r.metrics.counts,
                    "per_intent": per_intent,
                    "failures": r.failures,
                    "metadata": {
                        "kind": "agent-pipeline",
                        "model_id": r.config.model_id,
                        "prompt_style": r.config.prompt_style,
                        "ablation": ablation,
                        "config_digest": r.config_digest,
                        "cache_hits": r.cache_hits,
                    },
                })
            })
            .collect();
        json!({
            "schema_version": RESULTS_SCHEMA_VERSION,
            "dataset": {"path": dataset, "examples": self.examples},
            "rows": rows,
        })
    }
}

fn fmt2(x: f64) -> String {
    format!("{x:.2}")
}

fn align(header: [&str; 4], rows: &[[String; 4]]) -> String {
    let mut widths = header.map(str::len);
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: [&str; 4]| {
        let mut s = format!("{:<w$}", cells[0], w = widths[0]);
        for (cell, w) in cells[1..].iter().zip(&widths[1..]) {
            s.push_str(&format!("  {cell:>w$}"));
        }
        s
    };
    let mut out = vec![line(header)];
    out.push(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    for r in rows {
        out.push(line([&r[0], &r[1], &r[2], &r[3]]));
    }
    out.join("\n") + "\n"
}

/// Runs every example under every config. A failed example becomes an
/// empty prediction and a recorded failure; only an unusable config stops
/// the benchmark. Examples under one config run concurrently up to the
/// config's in-flight limit.
pub async fn run_benchmark(
    dataset: &[LabeledExample],
    configs: &[BenchConfig],
    cache: &PredictionCache,
) -> Result<BenchmarkTable, WorkflowError> {
    let mut rows = Vec::with_capacity(configs.len());
    for bc in configs {
        let engine = Engine::from_config(bc.config.clone())?;
        let digest = bc.config.digest();
        let outcomes: Vec<(String, Result<IntentSet, String>, bool)> = stream::iter(dataset)
            .map(|ex| {
                let (engine, digest) = (&engine, &digest);
                async move {
                    if let Some(hit) = cache.get(&ex.tx_hash, digest) {
                        return (ex.tx_hash.clone(), Ok(hit), true);
                    }
                    let result = match engine.analyze(&ex.tx_hash).await {
                        Ok(out) => {
                            if let Err(e) = cache.put(&ex.tx_hash, digest, &out.report.accepted) {
                                tracing::warn!("prediction cache write failed: {e}");
                            }
                            Ok(out.report.accepted)
                        }
                        Err(e) => Err(e.to_string()),
                    };
                    (ex.tx_hash.clone(), result, false)
                }
            })
            .buffered(bc.config.max_in_flight.max(1))
            .collect()
            .await;
        let mut predictions = Predictions::new();
        let mut failures = Vec::new();
        let mut cache_hits = 0;
        for (hash, result, hit) in outcomes {
            cache_hits += usize::from(hit);
            match result {
                Ok(set) => {
                    predictions.insert(hash, set);
                }
                Err(message) => {
                    failures.push(ExampleFailure { tx_hash: hash.clone(), message });
                    predictions.insert(hash, IntentSet::new());
                }
            }
        }
        rows.push(BenchRow {
            method: bc.method.clone(),
            config_digest: digest,
            metrics: score(&predictions, dataset),
            predictions,
            failures,
            cache_hits,
            config: bc.config.clone(),
        });
    }
    Ok(BenchmarkTable {
        examples: dataset.len(),
        rows,
    })
}

/// results.json plus the two text tables in `out_dir`.
pub fn write_results(table: &BenchmarkTable, dataset: &str, out_dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let results = out_dir.join("results.json");
    let mut text = serde_json::to_string_pretty(&table.to_results_json(dataset)).expect("results serialize");
    text.push('\n');
    std::fs::write(&results, text)?;
    let summary = out_dir.join("table.txt");
    let mut body = table.render();
    if !table.rows.is_empty() {
        body.push_str(&format!("\nPer intent ({}):\n", table.rows[0].method));
        body.push_str(&table.render_per_intent(0));
    }
    std::fs::write(&summary, body)?;
    Ok(vec![results, summary])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_names() {
        let base = RunConfig::default();
        let c = named_config(&base, "no_mp+no_ce").unwrap();
        assert_eq!(c.method, "w/o MP+CE");
        assert!(c.config.ablation.has(AblationFlag::NoMp) && c.config.ablation.has(AblationFlag::NoCe));
        assert_eq!(named_config(&base, "baseline").unwrap().method, "full");
        assert!(named_config(&base, "no_xx").is_err());
    }

    #[test]
    fn cache_round_trip_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let set: IntentSet = [crate::taxonomy::IntentCode::A3].into_iter().collect();
        let hash = format!("0x{}", "ab".repeat(32));
        PredictionCache::on_disk(dir.path()).put(&hash, "d1gest", &set).unwrap();
        let fresh = PredictionCache::on_disk(dir.path());
        assert_eq!(fresh.get(&hash, "d1gest"), Some(set));
        assert_eq!(fresh.get(&hash, "other"), None);
    }
}
