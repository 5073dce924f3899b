use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use intent_core::workflow::{analyze_transaction, persist_report, RunConfig};
use serde_json::{json, Value};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .canonicalize()
        .unwrap()
}

fn named(name: &str) -> String {
    let map: Value = serde_json::from_str(&std::fs::read_to_string(fixtures().join("named.json")).unwrap()).unwrap();
    map[name].as_str().unwrap().to_string()
}

fn miner(args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_intent-miner"));
    for key in ["INTENT_API_KEY", "INTENT_RPC_URL", "INTENT_SIGNATURE_URL", "RUST_LOG"] {
        cmd.env_remove(key);
    }
    cmd.args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Offline config: fixture chain data, fixture web/prices/history and a
/// mock script.
fn write_config(dir: &Path, script: &str) -> PathBuf {
    let f = fixtures();
    let config = json!({
        "rpc_endpoint": format!("fixture:{}", f.join("chain").display()),
        "mock_script": f.join(format!("scripts/{script}.json")),
        "web_fixtures": f.join("web"),
        "price_fixtures": f.join("prices.json"),
        "history_fixtures": f.join("history.json"),
    });
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

#[test]
fn analyze_prints_ranked_accepted_intents_and_persists() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "case_study");
    let out_dir = dir.path().join("run");
    let out = miner(&[
        "analyze",
        &named("case_study"),
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("A9, A5, A1"));
    assert!(text.contains("A9 DeFi Governance Token Staking"));
    assert!(out_dir.join("report.json").is_file());
    assert!(out_dir.join("transcript.jsonl").is_file());
}

#[test]
fn cli_and_library_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "case_study");
    let cli_dir = dir.path().join("cli");
    let out = miner(&[
        "analyze",
        &named("case_study"),
        "--config",
        config.to_str().unwrap(),
        "--out",
        cli_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);

    let lib_dir = dir.path().join("lib");
    let cfg = RunConfig::from_file(&config).unwrap();
    let rt = tokio::runtime::Runtime::new().unwrap();
    let output = rt
        .block_on(analyze_transaction(&named("case_study"), &cfg))
        .map_err(|e| e.to_string())
        .unwrap();
    persist_report(&output.report, &output.transcript, &lib_dir).unwrap();
    for file in ["report.json", "transcript.jsonl"] {
        let a = std::fs::read(cli_dir.join(file)).unwrap();
        let b = std::fs::read(lib_dir.join(file)).unwrap();
        assert!(a == b, "{file} differs");
    }
}

#[test]
fn ablation_flag_is_reflected_in_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "case_study");
    let out_dir = dir.path().join("run");
    let out = miner(&[
        "analyze",
        &named("case_study"),
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--ablation",
        "no_ce",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["accepted"], json!(["A1", "A4", "A5", "A9"]));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&miner(&["analyze", "0x1234"])), 1);
    assert_eq!(code(&miner(&["analyze", &named("case_study"), "--no-such-flag"])), 1);
    assert_eq!(code(&miner(&["analyze", &named("case_study"), "--ablation", "no_xx"])), 1);
    assert_eq!(code(&miner(&["analyze", &named("case_study"), "--config", "/nonexistent/config.json"])), 1);
    assert_eq!(code(&miner(&["evaluate", "/nonexistent/desk.jsonl"])), 1);
    assert_eq!(code(&miner(&[])), 1);
    assert_eq!(code(&miner(&["frobnicate"])), 1);
}

#[test]
fn help_exits_0_and_documents_every_flag() {
    let expected: &[(&str, &[&str])] = &[
        (
            "analyze",
            &[
                "--config",
                "--out",
                "--ablation",
                "--mock-script",
                "--model",
                "--llm-endpoint",
                "--rpc-url",
                "--signature-url",
                "--cache-dir",
                "--max-in-flight",
                "--verbose",
            ],
        ),
        ("evaluate", &["--configs", "--out", "--prediction-cache", "--config", "--mock-script"]),
        ("decode", &["--config", "--rpc-url"]),
        ("taxonomy", &["--help"]),
        ("tools", &["--config"]),
    ];
    for (cmd, flags) in expected {
        let out = miner(&[cmd, "--help"]);
        assert_eq!(code(&out), 0, "{cmd}");
        let text = stdout(&out);
        for flag in *flags {
            assert!(text.contains(flag), "{cmd} --help lacks {flag}");
        }
    }
    assert_eq!(code(&miner(&["--help"])), 0);
    assert_eq!(code(&miner(&["--version"])), 0);
}

#[test]
fn runtime_failure_exits_2_and_keeps_the_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "case_study");
    let out_dir = dir.path().join("run");
    let missing = format!("0x{}", "cd".repeat(32));
    let out = miner(&[
        "analyze",
        &missing,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(!out_dir.join("report.json").exists());
    assert!(out_dir.join("transcript.jsonl").is_file());
    assert!(String::from_utf8_lossy(&out.stderr).contains("not found"));
}

#[test]
fn evaluate_writes_one_row_per_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "desk_benchmark");
    let out_dir = dir.path().join("results");
    let out = miner(&[
        "evaluate",
        fixtures().join("dataset/desk.jsonl").to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--configs",
        "baseline,no_mp",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.starts_with("Method"));
    assert!(text.lines().any(|l| l.starts_with("full")));
    assert!(text.lines().any(|l| l.starts_with("w/o MP")));
    let results: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("results.json")).unwrap()).unwrap();
    assert_eq!(results["rows"].as_array().unwrap().len(), 2);
    assert!(out_dir.join("table.txt").is_file());
}

#[test]
fn evaluate_exits_2_when_everything_fails() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "desk_benchmark");
    let dataset = dir.path().join("ghosts.jsonl");
    std::fs::write(
        &dataset,
        format!(r#"{{"tx_hash": "0x{}", "labels": ["A1"]}}"#, "ef".repeat(32)),
    )
    .unwrap();
    let out = miner(&[
        "evaluate",
        dataset.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("r").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn taxonomy_lists_21_intents_under_8_headings() {
    let out = miner(&["taxonomy"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let intents = text.lines().filter(|l| l.trim_start().starts_with('A') && l.starts_with("    ")).count();
    let headings = text.lines().filter(|l| l.starts_with("  B")).count();
    assert_eq!((intents, headings), (21, 8));
}

#[test]
fn decode_hides_raw_fields() {
    let rpc = format!("fixture:{}", fixtures().join("chain").display());
    let out = miner(&["decode", &named("case_study"), "--rpc-url", &rpc]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("deposit("));
    assert!(!text.contains("logsBloom"));
}

#[test]
fn tools_lists_the_catalog() {
    let out = miner(&["tools"]);
    assert_eq!(code(&out), 0);
    let entries = stdout(&out).lines().filter(|l| l.chars().next().is_some_and(|c| c.is_ascii_digit())).count();
    assert!(entries >= 5, "{entries}");
}

#[test]
fn flags_override_env_which_overrides_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let good = format!("fixture:{}", fixtures().join("chain").display());
    let bad = format!("fixture:{}", dir.path().join("empty").display());
    let config = dir.path().join("config.json");
    std::fs::write(&config, json!({ "rpc_endpoint": bad }).to_string()).unwrap();
    let hash = named("approve");
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_intent-miner"));
        cmd.env_remove("INTENT_RPC_URL");
        if let Some(v) = env {
            cmd.env("INTENT_RPC_URL", v);
        }
        cmd.args(["decode", &hash, "--config", config.to_str().unwrap()]);
        if let Some(v) = flag {
            cmd.args(["--rpc-url", v]);
        }
        cmd.output().unwrap().status.code().unwrap()
    };
    assert_eq!(run(None, None), 2);
    assert_eq!(run(Some(&good), None), 0);
    assert_eq!(run(Some(&good), Some(&bad)), 2);
    assert_eq!(run(Some(&bad), Some(&good)), 0);
}
