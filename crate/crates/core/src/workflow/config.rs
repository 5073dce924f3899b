use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agents::{AgentParams, PromptStyle};
use crate::llm::RolePolicy;
use crate::toolbox::{DEFAULT_QS_BUDGET, DEFAULT_RESULT_BUDGET};

pub const ENV_API_KEY: &str = "INTENT_API_KEY";
pub const ENV_RPC_URL: &str = "INTENT_RPC_URL";
pub const ENV_SIGNATURE_URL: &str = "INTENT_SIGNATURE_URL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationFlag {
    NoMp,
    NoDe,
    NoQs,
    NoCe,
}

impl AblationFlag {
    pub const ALL: [AblationFlag; 4] = [Self::NoMp, Self::NoDe, Self::NoQs, Self::NoCe];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::NoMp => "no_mp",
            Self::NoDe => "no_de",
            Self::NoQs => "no_qs",
            Self::NoCe => "no_ce",
        }
    }
}

impl FromStr for AblationFlag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|f| f.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| format!("unknown ablation {s:?}; expected one of no_mp, no_de, no_qs, no_ce"))
    }
}

impl fmt::Display for AblationFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Independent switches that remove one agent stage each.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ablation(BTreeSet<AblationFlag>);

impl Ablation {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn with(mut self, flag: AblationFlag) -> Self {
        self.0.insert(flag);
        self
    }

    pub fn insert(&mut self, flag: AblationFlag) {
        self.0.insert(flag);
    }

    pub fn has(&self, flag: AblationFlag) -> bool {
        self.0.contains(&flag)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn flags(&self) -> impl Iterator<Item = AblationFlag> + '_ {
        self.0.iter().copied()
    }
}

impl FromIterator<AblationFlag> for Ablation {
    fn from_iter<T: IntoIterator<Item = AblationFlag>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    /// Estimated tokens one tool result may occupy.
    pub per_result: usize,
    /// Estimated tokens one solver prompt may occupy.
    pub per_qs_total: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            per_result: DEFAULT_RESULT_BUDGET,
            per_qs_total: DEFAULT_QS_BUDGET,
        }
    }
}

/// Everything one run depends on. Loaded from a JSON file, then
/// environment variables, then command-line flags, each overriding the
/// previous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model_id: String,
    /// Base URL of an OpenAI-compatible chat completions API.
    pub llm_endpoint: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    /// `fixture:<dir>` for committed captures, or an http(s) JSON-RPC URL.
    pub rpc_endpoint: String,
    /// Remote signature directory, `{selector}` is substituted.
    pub signature_url: Option<String>,
    /// JSON file of verified contract ABIs.
    pub abi_registry: Option<PathBuf>,
    pub prompt_style: PromptStyle,
    pub role_policy: RolePolicy,
    pub ablation: Ablation,
    pub budgets: Budgets,
    pub max_react_iterations: usize,
    pub max_perspectives: usize,
    pub ce_threshold: f64,
    /// Global cap on concurrent model requests.
    pub max_in_flight: usize,
    /// Run perspective pipelines concurrently (true) or one after another.
    pub concurrent_perspectives: bool,
    /// Scripted responses; selects the mock backend.
    pub mock_script: Option<PathBuf>,
    pub web_fixtures: Option<PathBuf>,
    pub price_fixtures: Option<PathBuf>,
    /// `{asset}` and `{timestamp}` are substituted.
    pub price_url: Option<String>,
    pub history_fixtures: Option<PathBuf>,
    /// `{address}` is substituted.
    pub history_url: Option<String>,
    pub history_limit: usize,
    /// Bundle cache for live RPC sources.
    pub cache_dir: Option<PathBuf>,
    pub llm_timeout_secs: u64,
    pub rpc_timeout_secs: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let params = AgentParams::default();
        Self {
            model_id: "grok-2".into(),
            llm_endpoint: "https://api.x.ai/v1".into(),
            api_key: None,
            rpc_endpoint: "fixture:fixtures/chain".into(),
            signature_url: None,
            abi_registry: None,
            prompt_style: PromptStyle::default(),
            role_policy: RolePolicy::default(),
            ablation: Ablation::none(),
            budgets: Budgets::default(),
            max_react_iterations: params.max_iterations,
            max_perspectives: params.max_perspectives,
            ce_threshold: params.ce_threshold,
            max_in_flight: 4,
            concurrent_perspectives: true,
            mock_script: None,
            web_fixtures: None,
            price_fixtures: None,
            price_url: None,
            history_fixtures: None,
            history_url: None,
            history_limit: crate::toolbox::history::DEFAULT_HISTORY_LIMIT,
            cache_dir: None,
            llm_timeout_secs: 120,
            rpc_timeout_secs: 30,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    /// Reads a config file. Relative paths inside it are resolved against
    /// the file's directory.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let err = |message: String| ConfigError::File {
            path: path.to_path_buf(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let mut cfg = Self::from_json(&text).map_err(err)?;
        if let Some(base) = path.parent() {
            cfg.rebase(base);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        for p in [
            &mut self.abi_registry,
            &mut self.mock_script,
            &mut self.web_fixtures,
            &mut self.price_fixtures,
            &mut self.history_fixtures,
            &mut self.cache_dir,
        ] {
            fix(p);
        }
        if let Some(dir) = self.rpc_endpoint.strip_prefix("fixture:") {
            if Path::new(dir).is_relative() {
                self.rpc_endpoint = format!("fixture:{}", base.join(dir).display());
            }
        }
    }

    /// Applies the API key, RPC URL and signature directory from the
    /// environment, where set and non-empty.
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) {
        let get = |k: &str| get(k).filter(|v| !v.trim().is_empty());
        if let Some(v) = get(ENV_API_KEY) {
            self.api_key = Some(v);
        }
        if let Some(v) = get(ENV_RPC_URL) {
            self.rpc_endpoint = v;
        }
        if let Some(v) = get(ENV_SIGNATURE_URL) {
            self.signature_url = Some(v);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        self.role_policy.validate().map_err(ConfigError::Invalid)?;
        if self.model_id.trim().is_empty() {
            return bad("model_id is empty".into());
        }
        if !(self.rpc_endpoint.starts_with("fixture:")
            || self.rpc_endpoint.starts_with("http://")
            || self.rpc_endpoint.starts_with("https://"))
        {
            return bad(format!(
                "rpc_endpoint {:?} must be fixture:<dir> or an http(s) URL",
                self.rpc_endpoint
            ));
        }
        if !(0.0..=1.0).contains(&self.ce_threshold) {
            return bad(format!("ce_threshold {} outside [0, 1]", self.ce_threshold));
        }
        if self.max_react_iterations == 0 {
            return bad("max_react_iterations must be at least 1".into());
        }
        if self.max_perspectives < 2 {
            return bad("max_perspectives must be at least 2".into());
        }
        if self.budgets.per_result == 0 || self.budgets.per_qs_total < self.budgets.per_result {
            return bad("budgets need 0 < per_result <= per_qs_total".into());
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be at least 1".into());
        }
        Ok(())
    }

    pub fn agent_params(&self) -> AgentParams {
        AgentParams {
            max_perspectives: self.max_perspectives,
            max_iterations: self.max_react_iterations,
            qs_budget: self.budgets.per_qs_total,
            ce_threshold: self.ce_threshold,
            ..AgentParams::default()
        }
    }

    /// Hex SHA-256 over the settings that can change a prediction. The key,
    /// cache location, timeouts and scheduling mode are left out.
    pub fn digest(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = v.as_object_mut() {
            for k in [
                "cache_dir",
                "llm_timeout_secs",
                "rpc_timeout_secs",
                "max_in_flight",
                "concurrent_perspectives",
            ] {
                obj.remove(k);
            }
        }
        // serde_json maps are ordered, so this text is canonical
        let text = serde_json::to_string(&v).expect("value serializes");
        let hash = Sha256::digest(text.as_bytes());
        hex::encode(hash)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ablation_round_trips_as_list() {
        let a = Ablation::none().with(AblationFlag::NoCe).with(AblationFlag::NoMp);
        let text = serde_json::to_string(&a).unwrap();
        assert_eq!(text, r#"["no_mp","no_ce"]"#);
        assert_eq!(serde_json::from_str::<Ablation>(&text).unwrap(), a);
        assert!("no_xx".parse::<AblationFlag>().is_err());
    }

    #[test]
    fn env_overrides_file_values() {
        let mut cfg = RunConfig::from_json(r#"{"rpc_endpoint": "fixture:x"}"#).unwrap();
        cfg.apply_env(|k| (k == ENV_RPC_URL).then(|| "http://node".to_string()));
        assert_eq!(cfg.rpc_endpoint, "http://node");
        cfg.apply_env(|_| Some("  ".into()));
        assert_eq!(cfg.rpc_endpoint, "http://node");
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_json(r#"{"modle_id": "x"}"#).is_err());
    }

    #[test]
    fn digest_ignores_secrets_and_scheduling() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.api_key = Some("k".into());
        b.concurrent_perspectives = false;
        assert_eq!(a.digest(), b.digest());
        b.ablation.insert(AblationFlag::NoQs);
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn validation() {
        assert!(RunConfig::default().validate().is_ok());
        let mut c = RunConfig::default();
        c.rpc_endpoint = "ftp://x".into();
        assert!(c.validate().is_err());
    }
}
