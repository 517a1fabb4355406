//! Bundled mock chat-completions server for tests and offline end-to-end
//! runs. Completions are canned by prompt hash; failures can be injected per
//! request; in-flight concurrency is tracked so tests can assert client-side
//! rate limits.

use std::collections::HashMap;
use std::collections::VecDeque;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

use crate::backend::DEFAULT_CHAT_PATH;
use crate::seeding::prompt_hash;

#[derive(Default)]
struct MockState {
    canned: Mutex<HashMap<String, String>>,
    fallback: Mutex<Option<String>>,
    inject: Mutex<VecDeque<u16>>,
    total_requests: AtomicUsize,
    inflight: AtomicUsize,
    max_inflight: AtomicUsize,
    delay_ms: AtomicU64,
}

/// A running mock server; shuts down when dropped.
pub struct MockChatServer {
    addr: SocketAddr,
    state: Arc<MockState>,
    handle: JoinHandle<()>,
}

fn extract_prompts(body: &Value) -> (String, String) {
    let mut system = String::new();
    let mut user = String::new();
    if let Some(messages) = body.get("messages").and_then(Value::as_array) {
        for msg in messages {
            let role = msg.get("role").and_then(Value::as_str).unwrap_or_default();
            let content = msg.get("content").and_then(Value::as_str).unwrap_or_default();
            match role {
                "system" => system = content.to_string(),
                "user" => user = content.to_string(),
                _ => {}
            }
        }
    }
    (system, user)
}

async fn chat_handler(
    State(state): State<Arc<MockState>>,
    Json(body): Json<Value>,
) -> (StatusCode, Json<Value>) {
    state.total_requests.fetch_add(1, Ordering::SeqCst);
    let inflight = state.inflight.fetch_add(1, Ordering::SeqCst) + 1;
    state.max_inflight.fetch_max(inflight, Ordering::SeqCst);

    let delay = state.delay_ms.load(Ordering::SeqCst);
    if delay > 0 {
        tokio::time::sleep(Duration::from_millis(delay)).await;
    }

    let response = (|| {
        if let Some(status) = state.inject.lock().unwrap().pop_front() {
            let code = StatusCode::from_u16(status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            return (code, Json(json!({"error": {"message": "injected failure"}})));
        }
        let (system, user) = extract_prompts(&body);
        let key = prompt_hash(&system, &user);
        let completion = state
            .canned
            .lock()
            .unwrap()
            .get(&key)
            .cloned()
            .or_else(|| state.fallback.lock().unwrap().clone());
        match completion {
            Some(content) => (
                StatusCode::OK,
                Json(json!({
                    "choices": [{"message": {"role": "assistant", "content": content}}],
                })),
            ),
            None => (
                StatusCode::NOT_FOUND,
                Json(json!({"error": {"message": "no canned completion for prompt"}})),
            ),
        }
    })();

    state.inflight.fetch_sub(1, Ordering::SeqCst);
    response
}

impl MockChatServer {
    pub async fn start() -> Self {
        let state = Arc::new(MockState::default());
        let router = Router::new()
            .route(DEFAULT_CHAT_PATH, post(chat_handler))
            .with_state(state.clone());
        let listener = TcpListener::bind("127.0.0.1:0").await.expect("bind mock server");
        let addr = listener.local_addr().expect("local addr");
        let handle = tokio::spawn(async move {
            let _ = axum::serve(listener, router).await;
        });
        Self { addr, state, handle }
    }

    /// Base URL suitable for `BackendConfig.endpoint_url`.
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Cans a completion for the exact (system, user) prompt pair.
    pub fn can(&self, system: &str, user: &str, completion: &str) {
        self.state
            .canned
            .lock()
            .unwrap()
            .insert(prompt_hash(system, user), completion.to_string());
    }

    /// Completion served when no canned entry matches.
    pub fn set_fallback(&self, completion: &str) {
        *self.state.fallback.lock().unwrap() = Some(completion.to_string());
    }

    /// Queues an HTTP status to return (once) before serving normally.
    pub fn inject_status(&self, status: u16) {
        self.state.inject.lock().unwrap().push_back(status);
    }

    /// Artificial per-request latency, for concurrency assertions.
    pub fn set_delay_ms(&self, ms: u64) {
        self.state.delay_ms.store(ms, Ordering::SeqCst);
    }

    pub fn total_requests(&self) -> usize {
        self.state.total_requests.load(Ordering::SeqCst)
    }

    /// Highest number of simultaneously in-flight requests observed.
    pub fn max_inflight(&self) -> usize {
        self.state.max_inflight.load(Ordering::SeqCst)
    }
}

impl Drop for MockChatServer {
    fn drop(&mut self) {
        self.handle.abort();
    }
}
