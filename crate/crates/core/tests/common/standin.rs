//! Local HTTP stand-ins for the JSON-RPC node and the chat completions API.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use intent_core::llm::{ChatMessage, CompletionRequest, LlmBackend, MockBackend, MockScript};
use serde_json::{json, Value};

/// Serves `router` on an ephemeral port; returns the base URL.
pub async fn serve(router: Router) -> String {
    let listener = tokio::net::TcpListener::bind(SocketAddr::from(([127, 0, 0, 1], 0))).await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, router).await.unwrap() });
    format!("http://{addr}")
}

#[derive(Clone)]
struct Node {
    dir: PathBuf,
    /// Leading requests answered with 503 before the node recovers.
    failures: Arc<AtomicUsize>,
    trace: bool,
}

fn capture(dir: &PathBuf, hash: &str) -> Option<Value> {
    let text = std::fs::read_to_string(dir.join(format!("{hash}.json"))).ok()?;
    serde_json::from_str(&text).ok()
}

async fn rpc(State(node): State<Node>, Json(req): Json<Value>) -> Response {
    if node
        .failures
        .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
        .is_ok()
    {
        return StatusCode::SERVICE_UNAVAILABLE.into_response();
    }
    let id = req["id"].clone();
    let param = req["params"][0].as_str().unwrap_or_default().to_ascii_lowercase();
    let reply = |result: Value| Json(json!({"jsonrpc": "2.0", "id": id, "result": result})).into_response();
    match req["method"].as_str().unwrap_or_default() {
        "eth_getTransactionByHash" => reply(capture(&node.dir, &param).map_or(Value::Null, |c| c["transaction"].clone())),
        "eth_getTransactionReceipt" => reply(capture(&node.dir, &param).map_or(Value::Null, |c| c["receipt"].clone())),
        "debug_traceTransaction" if node.trace => reply(capture(&node.dir, &param).map_or(Value::Null, |c| c["trace"].clone())),
        "debug_traceTransaction" => Json(json!({
            "jsonrpc": "2.0", "id": req["id"], "error": {"code": -32601, "message": "method not found"}
        }))
        .into_response(),
        "eth_getBlockByNumber" => {
            // blocks are looked up through any capture sharing the number
            let mut found = Value::Null;
            for entry in std::fs::read_dir(&node.dir).unwrap() {
                let c: Value = serde_json::from_str(&std::fs::read_to_string(entry.unwrap().path()).unwrap()).unwrap();
                if param == "latest" || c["block"]["number"].as_str() == Some(param.as_str()) {
                    found = c["block"].clone();
                    if param == "latest" {
                        found["transactions"] = json!([c["transaction"]["hash"]]);
                    }
                    break;
                }
            }
            reply(found)
        }
        other => Json(json!({
            "jsonrpc": "2.0", "id": req["id"], "error": {"code": -32601, "message": format!("{other} not supported")}
        }))
        .into_response(),
    }
}

/// JSON-RPC node answering from the committed captures.
pub async fn rpc_node(dir: PathBuf, failures: usize, trace: bool) -> String {
    let node = Node {
        dir,
        failures: Arc::new(AtomicUsize::new(failures)),
        trace,
    };
    serve(Router::new().route("/", post(rpc)).with_state(node)).await
}

#[derive(Clone)]
struct Chat {
    backend: Arc<MockBackend>,
    key: Option<String>,
}

async fn chat(State(chat): State<Chat>, headers: axum::http::HeaderMap, Json(body): Json<Value>) -> Response {
    if let Some(key) = &chat.key {
        let auth = headers.get("authorization").and_then(|v| v.to_str().ok());
        if auth != Some(format!("Bearer {key}").as_str()) {
            return StatusCode::UNAUTHORIZED.into_response();
        }
    }
    let messages: Vec<ChatMessage> = serde_json::from_value(body["messages"].clone()).unwrap();
    let request = CompletionRequest {
        model: body["model"].as_str().unwrap_or_default().to_string(),
        messages,
        temperature: body["temperature"].as_f64().unwrap_or(1.0),
        top_p: body["top_p"].as_f64().unwrap_or(1.0),
    };
    match chat.backend.complete(&request).await {
        Ok(c) => Json(json!({
            "choices": [{"index": 0, "message": {"role": "assistant", "content": c.text}}],
            "usage": {"prompt_tokens": 10, "completion_tokens": 5},
        }))
        .into_response(),
        Err(e) => (StatusCode::BAD_REQUEST, e.to_string()).into_response(),
    }
}

/// OpenAI-compatible API answering from a mock script; returns the `/v1` root.
pub async fn chat_api(script: MockScript, key: Option<String>) -> String {
    let state = Chat {
        backend: Arc::new(MockBackend::new(script)),
        key,
    };
    let base = serve(Router::new().route("/v1/chat/completions", post(chat)).with_state(state)).await;
    format!("{base}/v1")
}
