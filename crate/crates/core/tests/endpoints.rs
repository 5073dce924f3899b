mod common;

use std::time::Duration;

use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::routing::get;
use axum::{Json, Router};
use common::standin::{chat_api, rpc_node, serve};
use common::{fixtures, mock_config, named};
use intent_core::chaindata::{
    ChainError, ChainSource, FixtureChainSource, JsonRpcClient, RemoteDirectory, RetryPolicy, RpcErrorKind, Selector,
    TxHash,
};
use intent_core::llm::{ChatMessage, CompletionRequest, LlmBackend, LlmError, MockScript, OpenAiBackend};
use intent_core::toolbox::{AddressHistoryTool, HistoryProvider, PriceLookupTool, PriceProvider, ToolError, WebFetchTool, WebSource};
use intent_core::workflow::Engine;
use serde_json::json;

const T: Duration = Duration::from_secs(5);

fn fast_retry() -> RetryPolicy {
    RetryPolicy {
        attempts: 3,
        base_delay: Duration::from_millis(5),
    }
}

fn hash(name: &str) -> TxHash {
    named(name).parse().unwrap()
}

#[tokio::test]
async fn rpc_bundle_matches_the_capture() {
    let url = rpc_node(fixtures().join("chain"), 0, true).await;
    let client = JsonRpcClient::new(url, T, fast_retry()).unwrap();
    let fixture = FixtureChainSource::new(fixtures().join("chain"));
    for name in ["case_study", "plain_transfer", "swap"] {
        let live = client.fetch_bundle(&hash(name)).await.unwrap();
        assert_eq!(live, fixture.fetch_bundle(&hash(name)).await.unwrap(), "{name}");
    }
}

#[tokio::test]
async fn rpc_retries_transient_failures() {
    let url = rpc_node(fixtures().join("chain"), 2, true).await;
    let client = JsonRpcClient::new(url, T, fast_retry()).unwrap();
    assert!(client.fetch_bundle(&hash("approve")).await.is_ok());
}

#[tokio::test]
async fn rpc_gives_up_after_the_retry_budget() {
    let url = rpc_node(fixtures().join("chain"), 10, true).await;
    let client = JsonRpcClient::new(url, T, fast_retry()).unwrap();
    match client.fetch_bundle(&hash("approve")).await {
        Err(ChainError::Rpc {
            kind: RpcErrorKind::Http(503),
            ..
        }) => {}
        other => panic!("{other:?}"),
    }
}

#[tokio::test]
async fn rpc_without_tracing_still_yields_a_bundle() {
    let url = rpc_node(fixtures().join("chain"), 0, false).await;
    let client = JsonRpcClient::new(url, T, fast_retry()).unwrap();
    let bundle = client.fetch_bundle(&hash("case_study")).await.unwrap();
    assert!(bundle.trace.is_none());
    assert!(!bundle.receipt_logs.is_empty());
}

#[tokio::test]
async fn rpc_unknown_hash_is_not_found() {
    let url = rpc_node(fixtures().join("chain"), 0, true).await;
    let client = JsonRpcClient::new(url, T, fast_retry()).unwrap();
    let missing: TxHash = format!("0x{}", "ab".repeat(32)).parse().unwrap();
    assert!(matches!(client.fetch_bundle(&missing).await, Err(ChainError::NotFound(_))));
}

#[tokio::test]
async fn rpc_latest_transactions() {
    let url = rpc_node(fixtures().join("chain"), 0, true).await;
    let client = JsonRpcClient::new(url, T, fast_retry()).unwrap();
    assert_eq!(client.latest_transactions(3).await.unwrap().len(), 1);
}

#[tokio::test]
async fn chat_backend_round_trip_with_bearer_key() {
    let mut script = MockScript::default();
    script.push("ping", "pong");
    let base = chat_api(script, Some("sk-test".into())).await;
    let request = CompletionRequest {
        model: "m".into(),
        messages: vec![ChatMessage::system("s"), ChatMessage::user("ping")],
        temperature: 0.0,
        top_p: 1.0,
    };
    let ok = OpenAiBackend::new(&base, Some("sk-test".into()), T).unwrap();
    let reply = ok.complete(&request).await.unwrap();
    assert_eq!(reply.text, "pong");
    assert_eq!(reply.usage.unwrap().completion_tokens, 5);
    let wrong = OpenAiBackend::new(&base, Some("nope".into()), T).unwrap();
    assert!(matches!(wrong.complete(&request).await, Err(LlmError::Http { status: 401, .. })));
}

#[tokio::test]
async fn chat_backend_reports_context_overflow() {
    let router = Router::new().route(
        "/v1/chat/completions",
        axum::routing::post(|| async {
            (
                StatusCode::BAD_REQUEST,
                r#"{"error":{"code":"context_length_exceeded"}}"#,
            )
        }),
    );
    let base = format!("{}/v1", serve(router).await);
    let backend = OpenAiBackend::new(base, None, T).unwrap();
    let request = CompletionRequest {
        model: "m".into(),
        messages: vec![ChatMessage::user("x")],
        temperature: 0.0,
        top_p: 1.0,
    };
    assert!(matches!(backend.complete(&request).await, Err(LlmError::ContextOverflow(_))));
}

#[tokio::test]
async fn signature_directory_drops_mismatching_entries() {
    let router = Router::new().route(
        "/sig/:selector",
        get(|| async {
            Json(json!({"results": [
                {"text_signature": "transfer(address,uint256)"},
                {"text_signature": "notTheRightOne(uint8)"},
                {"text_signature": "not even a signature"},
            ]}))
        }),
    );
    let base = serve(router).await;
    let dir = RemoteDirectory::new(format!("{base}/sig/{{selector}}"), T).unwrap();
    let selector: Selector = "0xa9059cbb".parse().unwrap();
    let found = dir.lookup(&selector).await.unwrap();
    assert_eq!(found.len(), 1);
    assert_eq!(found[0].canonical(), "transfer(address,uint256)");
}

#[tokio::test]
async fn web_fetch_strips_markup_and_reports_status() {
    let router = Router::new()
        .route(
            "/doc",
            get(|| async {
                (
                    [(header::CONTENT_TYPE, "text/html")],
                    "<html><head><script>var x;</script></head><body><p>Vault deposits mint shares.</p></body></html>",
                )
            }),
        )
        .route("/gone", get(|| async { StatusCode::NOT_FOUND.into_response() }));
    let base = serve(router).await;
    let tool = WebFetchTool::new(WebSource::http(T).unwrap());
    let page = tool.fetch(&format!("{base}/doc")).await.unwrap();
    assert!(page.text.contains("Vault deposits mint shares."));
    assert!(!page.text.contains("var x"));
    assert!(matches!(
        tool.fetch(&format!("{base}/gone")).await,
        Err(ToolError::Fetch { status: 404, .. })
    ));
}

#[tokio::test]
async fn price_provider_over_http() {
    let router = Router::new()
        .route(
            "/price/WETH",
            get(|| async { Json(json!({"symbol": "WETH", "price": "3120.55", "currency": "USD", "as_of": 1700000000})) }),
        )
        .route("/price/NOPE", get(|| async { StatusCode::NOT_FOUND.into_response() }))
        .route("/price/FLAKY", get(|| async { StatusCode::BAD_GATEWAY.into_response() }));
    let base = serve(router).await;
    let tool = PriceLookupTool::new(PriceProvider::http(format!("{base}/price/{{asset}}"), T).unwrap());
    assert!(tool.price("WETH", None).await.unwrap().text.starts_with("WETH = 3120.55 USD"));
    assert!(matches!(tool.price("NOPE", None).await, Err(ToolError::UnknownAsset(_))));
    let degraded = tool.price("FLAKY", None).await.unwrap();
    assert_eq!(degraded.text, "price unavailable: provider returned 502");
}

#[tokio::test]
async fn history_provider_over_http() {
    let router = Router::new().route(
        "/h/:address",
        get(|| async {
            Json(json!([
                {"hash": "0x01", "block_number": 5, "from": "0x1111111111111111111111111111111111111111",
                 "to": "0x2222222222222222222222222222222222222222", "value": "1000000000000000000", "method": "deposit"},
                {"hash": "0x02", "block_number": 9, "from": "0x2222222222222222222222222222222222222222",
                 "to": "0x1111111111111111111111111111111111111111", "value": "0", "method": null}
            ]))
        }),
    );
    let base = serve(router).await;
    let tool = AddressHistoryTool::new(HistoryProvider::http(format!("{base}/h/{{address}}"), T).unwrap(), 20);
    let out = tool.history("0x1111111111111111111111111111111111111111", None).await.unwrap();
    let lines: Vec<&str> = out.text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("block 9 0x02 in"));
    assert!(lines[1].contains("out") && lines[1].contains("method=deposit"));
}

#[tokio::test]
async fn engine_over_http_matches_the_offline_run() {
    let offline = Engine::from_config(mock_config("case_study")).unwrap();
    let expected = offline.analyze(&named("case_study")).await.map_err(|e| e.to_string()).unwrap();

    let script = MockScript::from_file(&fixtures().join("scripts/case_study.json")).unwrap();
    let mut cfg = mock_config("case_study");
    cfg.mock_script = None;
    cfg.llm_endpoint = chat_api(script, Some("sk-local".into())).await;
    cfg.api_key = Some("sk-local".into());
    cfg.rpc_endpoint = rpc_node(fixtures().join("chain"), 0, true).await;
    let engine = Engine::from_config(cfg).unwrap();
    let out = engine.analyze(&named("case_study")).await.map_err(|e| e.to_string()).unwrap();
    assert_eq!(out.report.accepted, expected.report.accepted);
    assert_eq!(out.report.ranked, expected.report.ranked);
}
