//! The chat-completions backend against a local stub server.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use nexthint_core::llm::{ChatCompletionsBackend, CompletionRequest, LlmClient, LlmError, RetryPolicy};
use serde_json::{json, Value};

#[derive(Clone)]
struct Stub {
    calls: Arc<AtomicUsize>,
    /// Status for call k (0-based); the last entry repeats.
    script: Arc<Vec<u16>>,
    seen: Arc<std::sync::Mutex<Vec<(HeaderMap, Value)>>>,
}

async fn handler(State(stub): State<Stub>, headers: HeaderMap, Json(body): Json<Value>) -> Response {
    let k = stub.calls.fetch_add(1, Ordering::SeqCst);
    stub.seen.lock().unwrap().push((headers, body.clone()));
    let status = stub.script[k.min(stub.script.len() - 1)];
    if status != 200 {
        let mut resp = (StatusCode::from_u16(status).unwrap(), "nope").into_response();
        if status == 429 {
            resp.headers_mut().insert("retry-after", "0".parse().unwrap());
        }
        return resp;
    }
    Json(json!({
        "model": body["model"],
        "choices": [{"message": {"role": "assistant", "content": "  Read n first.  "}}],
        "usage": {"prompt_tokens": 10, "completion_tokens": 3, "total_tokens": 13}
    }))
    .into_response()
}

async fn serve(script: Vec<u16>) -> (String, Stub) {
    let stub = Stub {
        calls: Arc::new(AtomicUsize::new(0)),
        script: Arc::new(script),
        seen: Arc::default(),
    };
    let app = Router::new().route("/v1/chat/completions", post(handler)).with_state(stub.clone());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (format!("http://{addr}/v1"), stub)
}

fn fast() -> RetryPolicy {
    RetryPolicy {
        max_retries: 3,
        base_delay: Duration::from_millis(5),
        max_delay: Duration::from_millis(50),
    }
}

fn client(base: &str) -> LlmClient {
    let backend = ChatCompletionsBackend::new(base, "sk-test").unwrap().with_retry(fast());
    LlmClient::new(Arc::new(backend), 4)
}

#[tokio::test]
async fn retries_rate_limits_then_succeeds() {
    let (base, stub) = serve(vec![429, 429, 200]).await;
    let c = client(&base);
    let resp = c.complete(&c.request("Student code:\nn = 1", 0.3)).await.unwrap();
    assert_eq!(resp.text, "Read n first.");
    assert_eq!(resp.usage.unwrap().total_tokens, 13);
    assert_eq!(stub.calls.load(Ordering::SeqCst), 3);

    let seen = stub.seen.lock().unwrap();
    let (headers, body) = &seen[2];
    assert_eq!(headers["authorization"], "Bearer sk-test");
    assert_eq!(body["messages"][0]["role"], "user");
    assert_eq!(body["messages"][0]["content"], "Student code:\nn = 1");
    assert_eq!(body["temperature"], 0.3);
    assert_eq!(body["max_tokens"], 256);
}

#[tokio::test]
async fn server_errors_exhaust_retries() {
    let (base, stub) = serve(vec![503]).await;
    let c = client(&base);
    let err = c.complete(&CompletionRequest::new("p", 0.5)).await.unwrap_err();
    assert!(matches!(err, LlmError::Transport { attempts: 4, .. }), "{err}");
    assert!(err.is_transient());
    assert_eq!(stub.calls.load(Ordering::SeqCst), 4);
}

#[tokio::test]
async fn rejected_credential_is_not_retried() {
    let (base, stub) = serve(vec![401]).await;
    let err = client(&base).complete(&CompletionRequest::new("p", 0.5)).await.unwrap_err();
    assert!(matches!(err, LlmError::Credential(_)));
    assert!(!err.to_string().contains("sk-test"));
    assert_eq!(stub.calls.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn client_errors_are_not_retried() {
    let (base, stub) = serve(vec![400]).await;
    let err = client(&base).complete(&CompletionRequest::new("p", 0.5)).await.unwrap_err();
    assert!(matches!(err, LlmError::Http { status: 400, .. }));
    assert_eq!(stub.calls.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn unreachable_endpoint_is_transport_error() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let err = client(&format!("http://{addr}/v1"))
        .complete(&CompletionRequest::new("p", 0.5))
        .await
        .unwrap_err();
    assert!(matches!(err, LlmError::Transport { .. }), "{err}");
}

#[test]
fn missing_credential() {
    assert!(matches!(ChatCompletionsBackend::new("http://x", ""), Err(LlmError::Credential(_))));
}
