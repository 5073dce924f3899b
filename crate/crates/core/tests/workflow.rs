mod common;

use std::sync::Arc;

use common::{mock_config, named, with_flags};
use intent_core::agents::{Verdict, CANONICAL_PERSPECTIVES};
use intent_core::llm::{MockBackend, MockScript, RoleKind};
use intent_core::taxonomy::{load_taxonomy, IntentCode};
use intent_core::transcript::{parse_jsonl, Event, Record, Stage};
use intent_core::workflow::{
    analyze_transaction, persist_report, AblationFlag, Engine, FinalIntentReport, RunConfig, RunOutput, WorkflowError,
};
use IntentCode::*;

async fn run(hash: &str, cfg: &RunConfig) -> RunOutput {
    match analyze_transaction(hash, cfg).await {
        Ok(o) => o,
        Err(e) => panic!("run failed: {e}"),
    }
}

fn exchanges(records: &[Record], stage: Stage) -> usize {
    records.iter().filter(|r| r.is_exchange() && r.stage == stage).count()
}

fn plan_of(records: &[Record]) -> Vec<String> {
    records
        .iter()
        .find_map(|r| match &r.event {
            Event::Plan { perspectives } => Some(perspectives.clone()),
            _ => None,
        })
        .expect("a plan record")
}

#[tokio::test]
async fn case_study_accepts_compound_intent() {
    let out = run(&named("case_study"), &mock_config("case_study")).await;
    let r = &out.report;
    assert_eq!(r.accepted.iter().collect::<Vec<_>>(), vec![A1, A5, A9]);
    let order: Vec<IntentCode> = r.ranked.entries.iter().map(|e| e.code).collect();
    assert_eq!(order, vec![A9, A5, A1, A4]);
    let a4 = &r.ranked.entries[3];
    assert_eq!(a4.verdict, Verdict::Rejected);
    assert!((a4.combined - 0.25).abs() < 1e-12);
    assert_eq!(r.perspectives.len(), 3);
    assert!(r.failures.is_empty());
    assert!(r.explanation.starts_with("Accepted intents:"));
}

#[tokio::test]
async fn stage_coverage_and_role_policy() {
    let out = run(&named("case_study"), &mock_config("case_study")).await;
    let records = out.transcript.records();
    assert!(exchanges(&records, Stage::Mp) >= 1);
    assert_eq!(exchanges(&records, Stage::Ce), 1);
    for name in CANONICAL_PERSPECTIVES {
        let mine: Vec<&Record> = records.iter().filter(|r| r.perspective.as_deref() == Some(name)).collect();
        assert!(mine.iter().any(|r| r.is_exchange() && r.stage == Stage::De));
        for q in 1..=3 {
            assert!(
                mine.iter()
                    .any(|r| r.is_exchange() && r.stage == Stage::Qs && r.question == Some(q)),
                "{name} question {q}"
            );
        }
    }
    for r in &records {
        if let Event::Exchange {
            temperature, role_kind, ..
        } = &r.event
        {
            let want = match r.stage {
                Stage::Mp | Stage::De => 0.5,
                _ => 0.0,
            };
            assert_eq!(*temperature, want, "{:?}", r.stage);
            let kind = if want == 0.5 { RoleKind::Creative } else { RoleKind::Executive };
            assert_eq!(*role_kind, kind);
        }
    }
    assert!(records.iter().any(|r| r.is_tool()));
}

#[tokio::test]
async fn repeated_runs_are_byte_identical() {
    let cfg = mock_config("case_study");
    let first = run(&named("case_study"), &cfg).await;
    for _ in 0..3 {
        let again = run(&named("case_study"), &cfg).await;
        assert_eq!(again.report.to_json(), first.report.to_json());
        assert_eq!(again.transcript.to_jsonl(), first.transcript.to_jsonl());
    }
}

#[tokio::test]
async fn scheduling_does_not_change_the_outcome() {
    let concurrent = run(&named("case_study"), &mock_config("case_study")).await;
    let mut cfg = mock_config("case_study");
    cfg.concurrent_perspectives = false;
    let sequential = run(&named("case_study"), &cfg).await;
    assert_eq!(concurrent.report.to_json(), sequential.report.to_json());
    assert_eq!(concurrent.transcript.to_jsonl(), sequential.transcript.to_jsonl());
}

#[tokio::test]
async fn plain_transfer_forces_best_candidate() {
    let out = run(&named("plain_transfer"), &mock_config("plain_transfer")).await;
    assert_eq!(out.report.perspectives.len(), 3);
    assert_eq!(out.report.accepted.iter().collect::<Vec<_>>(), vec![A3]);
    assert!(out.report.ranked.entries[0].reason.starts_with("forced-best"));
    let records = out.transcript.records();
    assert!(!records.iter().any(|r| r.is_tool()));
}

#[tokio::test]
async fn hallucinated_codes_never_reach_the_report() {
    let out = run(&named("case_study"), &mock_config("hallucination")).await;
    let text = out.report.to_json();
    assert!(!text.contains("A22"));
    assert!(!text.contains("Wash Trading"));
    let taxonomy = load_taxonomy();
    for code in out.report.accepted.iter() {
        assert!(taxonomy.lookup(code.as_str()).is_some());
    }
    let warnings: Vec<String> = out
        .transcript
        .records()
        .into_iter()
        .filter_map(|r| match r.event {
            Event::Warning { message } => Some(message),
            _ => None,
        })
        .collect();
    assert!(warnings.iter().any(|w| w.contains("A22")));
    assert!(warnings.iter().any(|w| w.contains("Wash Trading")));
}

#[tokio::test]
async fn no_mp_uses_the_canonical_trio() {
    let cfg = with_flags(mock_config("case_study"), &[AblationFlag::NoMp]);
    let out = run(&named("case_study"), &cfg).await;
    let records = out.transcript.records();
    assert_eq!(exchanges(&records, Stage::Mp), 0);
    assert_eq!(plan_of(&records), CANONICAL_PERSPECTIVES.map(String::from).to_vec());
    let names: Vec<&str> = out.report.perspectives.iter().map(|p| p.perspective.as_str()).collect();
    assert_eq!(names, CANONICAL_PERSPECTIVES);
}

#[tokio::test]
async fn no_qs_makes_no_tool_calls() {
    let cfg = with_flags(mock_config("case_study"), &[AblationFlag::NoQs]);
    let out = run(&named("case_study"), &cfg).await;
    let records = out.transcript.records();
    assert!(!records.iter().any(|r| r.is_tool()));
    assert_eq!(exchanges(&records, Stage::Qs), 0);
    assert!(!out.report.accepted.is_empty());
}

#[tokio::test]
async fn no_ce_accepts_the_union() {
    let cfg = with_flags(mock_config("case_study"), &[AblationFlag::NoCe]);
    let out = run(&named("case_study"), &cfg).await;
    assert_eq!(exchanges(&out.transcript.records(), Stage::Ce), 0);
    assert_eq!(out.report.accepted.iter().collect::<Vec<_>>(), vec![A1, A4, A5, A9]);
    assert!(out.report.ranked.entries.iter().all(|e| e.verdict == Verdict::Accepted));
    assert!(out.report.ranked.entries[0].reason.starts_with("aggregated without verification"));
}

#[tokio::test]
async fn no_de_skips_question_generation() {
    let cfg = with_flags(mock_config("case_study"), &[AblationFlag::NoDe]);
    let out = run(&named("case_study"), &cfg).await;
    let records = out.transcript.records();
    assert_eq!(exchanges(&records, Stage::De), 0);
    assert!(exchanges(&records, Stage::Qs) >= 3);
    assert!(!out.report.accepted.is_empty());
}

#[tokio::test]
async fn one_failed_perspective_is_recorded_and_skipped() {
    let cfg = mock_config("case_study");
    let mut script = MockScript::from_file(cfg.mock_script.as_ref().unwrap()).unwrap();
    script.entries.retain(|e| {
        let text = serde_json::to_string(&e.matcher).unwrap();
        !(text.contains("Market Dynamics Analysis") && text.contains("[stage=report]"))
    });
    let engine = Engine::with_backend(cfg, Arc::new(MockBackend::new(script))).unwrap();
    let out = engine.analyze(&named("case_study")).await.map_err(|e| e.to_string()).unwrap();
    assert_eq!(out.report.perspectives.len(), 2);
    assert_eq!(out.report.failures.len(), 1);
    assert_eq!(out.report.failures[0].perspective, "Market Dynamics Analysis");
    assert_eq!(out.report.accepted.iter().collect::<Vec<_>>(), vec![A1, A5, A9]);
    assert!(out.report.to_json().contains("\"failures\""));
}

#[tokio::test]
async fn all_perspectives_failing_aborts_with_transcript() {
    let cfg = mock_config("case_study");
    let mut script = MockScript::from_file(cfg.mock_script.as_ref().unwrap()).unwrap();
    script.entries.retain(|e| !serde_json::to_string(&e.matcher).unwrap().contains("[stage=questions]"));
    let engine = Engine::with_backend(cfg, Arc::new(MockBackend::new(script))).unwrap();
    let Err(err) = engine.analyze(&named("case_study")).await else {
        panic!("expected a failure")
    };
    assert!(matches!(err.error, WorkflowError::AllPerspectivesFailed(ref v) if v.len() == 3));
    let records = err.transcript.expect("partial transcript").records();
    assert!(records.iter().any(|r| r.is_exchange() && r.stage == Stage::Mp));
}

#[tokio::test]
async fn malformed_hash_is_rejected_before_any_exchange() {
    let Err(err) = analyze_transaction("0x1234", &mock_config("case_study")).await else {
        panic!("expected a failure")
    };
    assert!(matches!(err.error, WorkflowError::Chain(_)));
    assert!(err.transcript.is_none());
}

#[tokio::test]
async fn persisted_report_round_trips_and_overwrites() {
    let out = run(&named("case_study"), &mock_config("case_study")).await;
    let dir = tempfile::tempdir().unwrap();
    let paths = persist_report(&out.report, &out.transcript, dir.path()).unwrap();
    let text = std::fs::read_to_string(&paths.report).unwrap();
    let back: FinalIntentReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, out.report);
    let keys: Vec<String> = serde_json::from_str::<serde_json::Map<String, serde_json::Value>>(&text)
        .unwrap()
        .keys()
        .cloned()
        .collect();
    let mut sorted_expected = ["tx_hash", "accepted", "ranked", "perspectives", "explanation", "cost"].map(String::from);
    sorted_expected.sort();
    assert_eq!(keys, sorted_expected.to_vec());
    assert!(text.find("\"tx_hash\"").unwrap() < text.find("\"accepted\"").unwrap());

    let records = parse_jsonl(&std::fs::read_to_string(&paths.transcript).unwrap()).unwrap();
    assert_eq!(records, out.transcript.records());
    assert!(records.iter().all(|r| r.v == 1 && r.wall_time_ms.is_none()));

    // second write replaces the first and leaves no temporary files
    persist_report(&out.report, &out.transcript, dir.path()).unwrap();
    let mut names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["report.json", "transcript.jsonl"]);
}

#[tokio::test]
async fn unwritable_destination_is_an_io_error() {
    let out = run(&named("plain_transfer"), &mock_config("plain_transfer")).await;
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    assert!(persist_report(&out.report, &out.transcript, &blocker.join("out")).is_err());
}

#[tokio::test]
async fn replaying_a_transcript_reproduces_the_report() {
    let out = run(&named("case_study"), &mock_config("case_study")).await;
    let script = MockScript::from_transcript(&out.transcript.records());
    let mut cfg = mock_config("case_study");
    cfg.mock_script = None;
    let engine = Engine::with_backend(cfg, Arc::new(MockBackend::new(script))).unwrap();
    let again = engine.analyze(&named("case_study")).await.map_err(|e| e.to_string()).unwrap();
    assert_eq!(again.report.to_json(), out.report.to_json());
}
