use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use intent_core::chaindata::{decode_bundle, simplify_for_llm, EventDb, TxHash};
use intent_core::evaluation::{load_dataset, named_configs, run_benchmark, write_results, PredictionCache};
use intent_core::taxonomy::load_taxonomy;
use intent_core::workflow::{persist_report, persist_transcript, AblationFlag, Engine, RunConfig, WorkflowError};

/// Infers the DeFi intents behind Ethereum transactions.
///
/// Settings come from an optional JSON config file, then the environment
/// (INTENT_API_KEY, INTENT_RPC_URL, INTENT_SIGNATURE_URL), then flags; later
/// sources win.
#[derive(Parser, Debug)]
#[command(name = "intent-miner", version)]
struct Cli {
    /// Log at debug level (RUST_LOG overrides).
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analyze one transaction and write report.json and transcript.jsonl.
    Analyze {
        /// 0x-prefixed 32-byte transaction hash.
        tx_hash: String,
        #[command(flatten)]
        common: Common,
        /// Output directory [default: out/<tx_hash>].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Disable a stage: no_mp, no_de, no_qs or no_ce. Repeatable or
        /// comma-separated.
        #[arg(long, value_delimiter = ',')]
        ablation: Vec<AblationFlag>,
    },
    /// Score one or more configurations against a labeled dataset.
    Evaluate {
        /// JSONL file of {"tx_hash", "labels"} lines.
        dataset: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Comma-separated configurations: full (or baseline), langgpt, or
        /// +-joined ablations such as no_mp+no_ce.
        #[arg(long, value_delimiter = ',', default_value = "full")]
        configs: Vec<String>,
        /// Output directory for results.json and table.txt.
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Reuse predictions across runs from this directory.
        #[arg(long)]
        prediction_cache: Option<PathBuf>,
    },
    /// Print the simplified, model-facing view of a transaction.
    Decode {
        tx_hash: String,
        #[command(flatten)]
        common: Common,
    },
    /// Print the intent taxonomy.
    Taxonomy,
    /// Print the tool catalog available to the solver.
    Tools {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// JSON config file; relative paths inside it resolve against its directory.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Answer model calls from a mock script instead of the API.
    #[arg(long)]
    mock_script: Option<PathBuf>,
    /// Model identifier sent to the API.
    #[arg(long)]
    model: Option<String>,
    /// OpenAI-compatible API root.
    #[arg(long)]
    llm_endpoint: Option<String>,
    /// Ethereum JSON-RPC URL, or fixture:<dir> for recorded captures.
    #[arg(long)]
    rpc_url: Option<String>,
    /// Signature directory URL template with a {selector} placeholder.
    #[arg(long)]
    signature_url: Option<String>,
    /// Cache fetched transaction bundles here.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Bound on concurrent model requests.
    #[arg(long)]
    max_in_flight: Option<usize>,
}

impl Common {
    fn resolve(&self, ablation: &[AblationFlag]) -> Result<RunConfig, Failure> {
        let mut config = match &self.config {
            Some(path) => RunConfig::from_file(path).map_err(|e| Failure::Usage(e.into()))?,
            None => RunConfig::default(),
        };
        config.apply_env(|k| std::env::var(k).ok());
        if let Some(v) = &self.mock_script {
            config.mock_script = Some(v.clone());
        }
        if let Some(v) = &self.model {
            config.model_id = v.clone();
        }
        if let Some(v) = &self.llm_endpoint {
            config.llm_endpoint = v.clone();
        }
        if let Some(v) = &self.rpc_url {
            config.rpc_endpoint = v.clone();
        }
        if let Some(v) = &self.signature_url {
            config.signature_url = Some(v.clone());
        }
        if let Some(v) = &self.cache_dir {
            config.cache_dir = Some(v.clone());
        }
        if let Some(v) = self.max_in_flight {
            config.max_in_flight = v;
        }
        for flag in ablation {
            config.ablation.insert(*flag);
        }
        config.validate().map_err(|e| Failure::Usage(e.into()))?;
        Ok(config)
    }
}

enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    fn runtime(e: impl Into<anyhow::Error>) -> Self {
        Self::Runtime(e.into())
    }
}

/// Config problems are the caller's to fix; everything else is runtime.
fn classify(e: WorkflowError) -> Failure {
    match e {
        WorkflowError::Config(_) => Failure::Usage(e.into()),
        other => Failure::Runtime(other.into()),
    }
}

fn parse_hash(text: &str) -> Result<TxHash, Failure> {
    text.parse()
        .map_err(|e| Failure::Usage(anyhow!("invalid transaction hash {text:?}: {e}")))
}

async fn analyze(tx_hash: &str, config: RunConfig, out: Option<PathBuf>) -> Result<(), Failure> {
    let hash = parse_hash(tx_hash)?;
    let out = out.unwrap_or_else(|| Path::new("out").join(hash.to_string()));
    let engine = Engine::from_config(config).map_err(classify)?;
    let output = match engine.analyze(&hash.to_string()).await {
        Ok(o) => o,
        Err(failure) => {
            if let Some(t) = &failure.transcript {
                match persist_transcript(t, &out) {
                    Ok(path) => eprintln!("transcript: {}", path.display()),
                    Err(e) => eprintln!("could not write transcript to {}: {e}", out.display()),
                }
            }
            return Err(Failure::Runtime(anyhow!(failure.error).context("analysis failed")));
        }
    };
    let paths = persist_report(&output.report, &output.transcript, &out)
        .with_context(|| format!("writing to {}", out.display()))
        .map_err(Failure::Runtime)?;
    let accepted: Vec<_> = output
        .report
        .ranked
        .entries
        .iter()
        .filter(|e| output.report.accepted.contains(e.code))
        .collect();
    let codes: Vec<String> = accepted.iter().map(|e| e.code.to_string()).collect();
    println!("{}", if codes.is_empty() { "(no intent accepted)".to_string() } else { codes.join(", ") });
    let taxonomy = load_taxonomy();
    for e in accepted.iter().take(3) {
        println!("  {} {} ({:.2}): {}", e.code, taxonomy.label(e.code).name, e.combined, e.reason);
    }
    println!("report: {}", paths.report.display());
    println!("transcript: {}", paths.transcript.display());
    Ok(())
}

async fn evaluate(
    dataset: &Path,
    base: RunConfig,
    configs: &[String],
    out: &Path,
    cache: Option<PathBuf>,
) -> Result<(), Failure> {
    let data = load_dataset(dataset).map_err(|e| Failure::Usage(e.into()))?;
    let names: Vec<&str> = configs.iter().map(String::as_str).collect();
    let configs = named_configs(&base, &names).map_err(|e| Failure::Usage(anyhow!(e)))?;
    let cache = cache.map_or_else(PredictionCache::in_memory, PredictionCache::on_disk);
    let table = run_benchmark(&data, &configs, &cache).await.map_err(classify)?;
    print!("{}", table.render());
    for row in &table.rows {
        for f in &row.failures {
            eprintln!("{}: {} failed: {}", row.method, f.tx_hash, f.message);
        }
    }
    let paths = write_results(&table, &dataset.display().to_string(), out)
        .with_context(|| format!("writing to {}", out.display()))
        .map_err(Failure::Runtime)?;
    for p in &paths {
        println!("wrote {}", p.display());
    }
    if table.all_failed() {
        return Err(Failure::Runtime(anyhow!("every example failed under every configuration")));
    }
    Ok(())
}

async fn decode(tx_hash: &str, config: RunConfig) -> Result<(), Failure> {
    let hash = parse_hash(tx_hash)?;
    let engine = Engine::from_config(config).map_err(classify)?;
    let bundle = engine.chain().fetch_bundle(&hash).await.map_err(Failure::runtime)?;
    let decoded = decode_bundle(&bundle, engine.resolver(), EventDb::builtin()).await;
    for w in &decoded.warnings {
        eprintln!("warning: {w}");
    }
    println!("{}", simplify_for_llm(&bundle, &decoded).text);
    Ok(())
}

async fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Analyze {
            tx_hash,
            common,
            out,
            ablation,
        } => analyze(&tx_hash, common.resolve(&ablation)?, out).await,
        Command::Evaluate {
            dataset,
            common,
            configs,
            out,
            prediction_cache,
        } => evaluate(&dataset, common.resolve(&[])?, &configs, &out, prediction_cache).await,
        Command::Decode { tx_hash, common } => decode(&tx_hash, common.resolve(&[])?).await,
        Command::Taxonomy => {
            print!("{}", load_taxonomy().render_table());
            Ok(())
        }
        Command::Tools { common } => {
            let engine = Engine::from_config(common.resolve(&[])?).map_err(classify)?;
            print!("{}", engine.toolbox().list_tools());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let default = if cli.verbose { "debug" } else { "warn" };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default)),
        )
        .init();
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match runtime.block_on(run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
