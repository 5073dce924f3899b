//! The coordinator: planner, concurrent perspective pipelines, evaluator,
//! and the final report.

pub mod config;
mod persist;
mod report;

use std::sync::Arc;
use std::time::Duration;

use futures::future::join_all;
use thiserror::Error;

use crate::agents::{
    aggregate_without_verification, ce_evaluate, de_answer_directly, de_compose_report, de_generate_questions, mp_plan,
    qs_direct, qs_solve, AgentEnv, AgentError, AnalysisReport, PerspectiveSpec, PromptSet, Question, Answer, TxInput,
};
use crate::chaindata::{
    decode_bundle, simplify_for_llm, AbiRegistry, BundleCache, CachedSource, ChainError, ChainSource, EventDb,
    FixtureChainSource, JsonRpcClient, RemoteDirectory, RetryPolicy, SignatureResolver, TxHash,
};
use crate::llm::{LlmBackend, LlmClient, LlmRetry, MockBackend, MockScript, OpenAiBackend};
use crate::taxonomy::load_taxonomy;
use crate::toolbox::{HistoryProvider, PriceProvider, ToolDeps, ToolError, Toolbox, WebSource};
use crate::transcript::{Event, Recorder, Stage, Transcript, PHASE_EVALUATION, PHASE_PERSPECTIVES, PHASE_SETUP};

pub use config::{Ablation, AblationFlag, Budgets, ConfigError, RunConfig, ENV_API_KEY, ENV_RPC_URL, ENV_SIGNATURE_URL};
pub use persist::{persist_report, persist_transcript, PersistedPaths, REPORT_FILE, TRANSCRIPT_FILE};
pub use report::{build_explanation, FinalIntentReport, PerspectiveFailure};

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("{stage}: {source}")]
    Agent { stage: &'static str, source: AgentError },
    #[error("every perspective failed: {}", .0.join("; "))]
    AllPerspectivesFailed(Vec<String>),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl WorkflowError {
    fn agent(stage: Stage, source: AgentError) -> Self {
        Self::Agent {
            stage: stage.as_str(),
            source,
        }
    }
}

/// A run that stopped early, with whatever it recorded.
pub struct RunFailure {
    pub error: WorkflowError,
    pub transcript: Option<Arc<Transcript>>,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.error.fmt(f)
    }
}

impl std::fmt::Debug for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RunFailure").field("error", &self.error).finish_non_exhaustive()
    }
}

impl std::error::Error for RunFailure {}

impl From<WorkflowError> for RunFailure {
    fn from(error: WorkflowError) -> Self {
        Self {
            error,
            transcript: None,
        }
    }
}

pub struct RunOutput {
    pub report: FinalIntentReport,
    pub transcript: Arc<Transcript>,
}

/// Long-lived pieces shared by every run under one configuration.
pub struct Engine {
    config: RunConfig,
    llm: LlmClient,
    prompts: PromptSet,
    chain: Arc<dyn ChainSource>,
    resolver: Arc<SignatureResolver>,
    toolbox: Toolbox,
}

impl Engine {
    /// Builds the backend named by the config: the mock when a script is
    /// given, otherwise the OpenAI-compatible client.
    pub fn from_config(config: RunConfig) -> Result<Self, WorkflowError> {
        config.validate()?;
        let backend: Arc<dyn LlmBackend> = match &config.mock_script {
            Some(path) => Arc::new(MockBackend::new(
                MockScript::from_file(path).map_err(ConfigError::Invalid)?,
            )),
            None => Arc::new(
                OpenAiBackend::new(
                    config.llm_endpoint.clone(),
                    config.api_key.clone(),
                    Duration::from_secs(config.llm_timeout_secs),
                )
                .map_err(|e| ConfigError::Invalid(e.to_string()))?,
            ),
        };
        Self::with_backend(config, backend)
    }

    pub fn with_backend(config: RunConfig, backend: Arc<dyn LlmBackend>) -> Result<Self, WorkflowError> {
        config.validate()?;
        let invalid = |e: String| WorkflowError::Config(ConfigError::Invalid(e));
        let rpc_timeout = Duration::from_secs(config.rpc_timeout_secs);
        let chain: Arc<dyn ChainSource> = match config.rpc_endpoint.strip_prefix("fixture:") {
            Some(dir) => Arc::new(FixtureChainSource::new(dir)),
            None => {
                let client = JsonRpcClient::new(config.rpc_endpoint.clone(), rpc_timeout, RetryPolicy::default())?;
                match &config.cache_dir {
                    Some(dir) => Arc::new(CachedSource::new(client, BundleCache::new(dir))),
                    None => Arc::new(client),
                }
            }
        };
        let registry = match &config.abi_registry {
            Some(path) => AbiRegistry::from_json(
                &std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?,
            )?,
            None => AbiRegistry::default(),
        };
        let remote = match &config.signature_url {
            Some(url) => Some(RemoteDirectory::new(url.clone(), rpc_timeout)?),
            None => None,
        };
        let resolver = Arc::new(SignatureResolver::new(registry, true, remote));
        let tool_err = |e: ToolError| invalid(e.to_string());
        let web = match &config.web_fixtures {
            Some(dir) => WebSource::fixture(dir).map_err(tool_err)?,
            None => WebSource::http(rpc_timeout).map_err(tool_err)?,
        };
        let prices = match (&config.price_fixtures, &config.price_url) {
            (Some(path), _) => PriceProvider::fixture_file(path).map_err(tool_err)?,
            (None, Some(url)) => PriceProvider::http(url.clone(), rpc_timeout).map_err(tool_err)?,
            (None, None) => PriceProvider::None,
        };
        let history = match (&config.history_fixtures, &config.history_url) {
            (Some(path), _) => HistoryProvider::fixture_file(path).map_err(tool_err)?,
            (None, Some(url)) => HistoryProvider::http(url.clone(), rpc_timeout).map_err(tool_err)?,
            (None, None) => HistoryProvider::None,
        };
        let toolbox = Toolbox::standard(
            ToolDeps {
                chain: chain.clone(),
                resolver: resolver.clone(),
                web,
                prices,
                history,
                history_limit: config.history_limit,
            },
            config.budgets.per_result,
        );
        let llm = LlmClient::new(
            backend,
            config.model_id.clone(),
            config.role_policy,
            LlmRetry::default(),
            config.max_in_flight,
        );
        Ok(Self {
            prompts: PromptSet::builtin(config.prompt_style),
            config,
            llm,
            chain,
            resolver,
            toolbox,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn toolbox(&self) -> &Toolbox {
        &self.toolbox
    }

    pub fn chain(&self) -> &Arc<dyn ChainSource> {
        &self.chain
    }

    pub fn resolver(&self) -> &Arc<SignatureResolver> {
        &self.resolver
    }

    fn env(&self) -> AgentEnv<'_> {
        AgentEnv {
            llm: &self.llm,
            prompts: &self.prompts,
            taxonomy: load_taxonomy(),
            params: self.config.agent_params(),
        }
    }

    /// One full analysis. On failure the partial transcript comes back with
    /// the error.
    pub async fn analyze(&self, tx_hash: &str) -> Result<RunOutput, RunFailure> {
        let hash: TxHash = tx_hash.parse().map_err(|e| WorkflowError::Chain(ChainError::InvalidHash(e)))?;
        let transcript = Transcript::new(self.llm.is_deterministic());
        match self.run(&hash, &transcript).await {
            Ok(mut report) => {
                report.cost = transcript.cost();
                Ok(RunOutput { report, transcript })
            }
            Err(error) => {
                transcript
                    .recorder(PHASE_EVALUATION, None)
                    .record(Stage::Engine, None, Event::Failure { message: error.to_string() });
                Err(RunFailure {
                    error,
                    transcript: Some(transcript),
                })
            }
        }
    }

    async fn run(&self, hash: &TxHash, transcript: &Arc<Transcript>) -> Result<FinalIntentReport, WorkflowError> {
        let setup = transcript.recorder(PHASE_SETUP, None);
        let ablation = &self.config.ablation;
        let bundle = self.chain.fetch_bundle(hash).await?;
        let decoded = decode_bundle(&bundle, &self.resolver, EventDb::builtin()).await;
        for w in &decoded.warnings {
            setup.warn(Stage::Chain, w.clone());
        }
        let context = simplify_for_llm(&bundle, &decoded);
        let hash_text = hash.to_string();
        let tx = TxInput {
            hash: &hash_text,
            context: &context.text,
        };
        let env = self.env();

        let perspectives = if ablation.has(AblationFlag::NoMp) {
            let trio = PerspectiveSpec::canonical();
            setup.record(
                Stage::Engine,
                None,
                Event::Plan {
                    perspectives: trio.iter().map(|p| p.name.clone()).collect(),
                },
            );
            trio
        } else {
            mp_plan(&env, tx, &setup).await.map_err(|e| WorkflowError::agent(Stage::Mp, e))?
        };

        let recorders: Vec<Recorder> = perspectives
            .iter()
            .enumerate()
            .map(|(i, p)| transcript.recorder(PHASE_PERSPECTIVES, Some((i, p.name.clone()))))
            .collect();
        let outcomes: Vec<Result<AnalysisReport, AgentError>> = if self.config.concurrent_perspectives {
            join_all(
                perspectives
                    .iter()
                    .zip(&recorders)
                    .map(|(p, rec)| self.perspective(&env, p, tx, rec)),
            )
            .await
        } else {
            let mut out = Vec::with_capacity(perspectives.len());
            for (p, rec) in perspectives.iter().zip(&recorders) {
                out.push(self.perspective(&env, p, tx, rec).await);
            }
            out
        };

        let mut reports = Vec::new();
        let mut failures = Vec::new();
        for ((p, rec), outcome) in perspectives.iter().zip(&recorders).zip(outcomes) {
            match outcome {
                Ok(r) => reports.push(r),
                Err(e) => {
                    rec.record(Stage::Engine, None, Event::Failure { message: e.to_string() });
                    failures.push(PerspectiveFailure {
                        perspective: p.name.clone(),
                        message: e.to_string(),
                    });
                }
            }
        }
        if reports.is_empty() {
            return Err(WorkflowError::AllPerspectivesFailed(
                failures.iter().map(|f| format!("{}: {}", f.perspective, f.message)).collect(),
            ));
        }

        let eval = transcript.recorder(PHASE_EVALUATION, None);
        let ranked = if ablation.has(AblationFlag::NoCe) {
            let ranked = aggregate_without_verification(&reports);
            if ranked.entries.is_empty() {
                return Err(WorkflowError::agent(Stage::Engine, AgentError::NoCandidates));
            }
            ranked
        } else {
            ce_evaluate(&env, tx, &reports, &eval)
                .await
                .map_err(|e| WorkflowError::agent(Stage::Ce, e))?
        };
        Ok(FinalIntentReport::assemble(hash_text, ranked, reports, failures))
    }

    /// One perspective: questions, the solver chain, then the report, with
    /// the configured stages swapped out.
    async fn perspective(
        &self,
        env: &AgentEnv<'_>,
        p: &PerspectiveSpec,
        tx: TxInput<'_>,
        rec: &Recorder,
    ) -> Result<AnalysisReport, AgentError> {
        let ablation = &self.config.ablation;
        if ablation.has(AblationFlag::NoDe) {
            return qs_direct(env, &self.toolbox, p, tx, rec).await;
        }
        let (_plan, questions) = de_generate_questions(env, p, tx, rec).await?;
        let chain: Vec<(Question, Answer)> = if ablation.has(AblationFlag::NoQs) {
            let answers = de_answer_directly(env, p, tx, &questions, rec).await?;
            questions.into_iter().zip(answers).collect()
        } else {
            let mut chain = Vec::with_capacity(questions.len());
            for q in questions {
                // each solver sees the answers before it
                let a = qs_solve(env, &self.toolbox, &q, &chain, tx, rec).await?;
                chain.push((q, a));
            }
            chain
        };
        de_compose_report(env, p, tx, &chain, rec).await
    }
}

/// Builds an engine from `config` and analyzes one transaction.
pub async fn analyze_transaction(tx_hash: &str, config: &RunConfig) -> Result<RunOutput, RunFailure> {
    let engine = Engine::from_config(config.clone())?;
    engine.analyze(tx_hash).await
}
