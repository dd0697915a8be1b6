//! Chat-completion client.
//!
//! [`LlmClient`] wraps a [`CompletionBackend`] with request validation,
//! response trimming and an in-flight cap. Two backends exist: the HTTP
//! [`ChatCompletionsBackend`] for OpenAI-compatible servers and the
//! deterministic [`MockBackend`] used for offline runs and tests.

mod mock;
mod openai;

use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::Semaphore;

pub use mock::{make_mock, MockBackend};
pub use openai::{ChatCompletionsBackend, RetryPolicy};

pub const ENV_API_KEY: &str = "STAP_API_KEY";
pub const ENV_API_BASE: &str = "STAP_API_BASE";
pub const ENV_MODEL: &str = "STAP_MODEL";

pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo";
pub const DEFAULT_API_BASE: &str = "https://api.openai.com/v1";
pub const DEFAULT_MAX_TOKENS: u32 = 256;
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub model_id: String,
    pub temperature: f64,
    pub prompt_text: String,
    pub max_tokens: u32,
    pub timeout: Duration,
}

impl CompletionRequest {
    pub fn new(prompt_text: impl Into<String>, temperature: f64) -> Self {
        Self {
            model_id: DEFAULT_MODEL.to_string(),
            temperature,
            prompt_text: prompt_text.into(),
            max_tokens: DEFAULT_MAX_TOKENS,
            timeout: Duration::from_secs(30),
        }
    }

    pub fn with_model(mut self, model_id: impl Into<String>) -> Self {
        self.model_id = model_id.into();
        self
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if !(0.0..=1.0).contains(&self.temperature) {
            return Err(LlmError::InvalidRequest(format!(
                "temperature {} outside [0, 1]",
                self.temperature
            )));
        }
        if self.prompt_text.trim().is_empty() {
            return Err(LlmError::InvalidRequest("prompt text is empty".into()));
        }
        if self.max_tokens == 0 {
            return Err(LlmError::InvalidRequest("max_tokens must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u32,
    pub completion_tokens: u32,
    pub total_tokens: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
    pub model_id: String,
    pub latency_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<Usage>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("invalid completion request: {0}")]
    InvalidRequest(String),
    #[error("credential error: {0}")]
    Credential(String),
    #[error("transport error after {attempts} attempt(s): {detail}")]
    Transport { attempts: u32, detail: String },
    #[error("completion endpoint returned HTTP {status}: {detail}")]
    Http { status: u16, detail: String },
    #[error("completion endpoint returned an unreadable body: {0}")]
    Decode(String),
    #[error("completion was empty")]
    EmptyResponse,
}

impl LlmError {
    /// Whether the caller may try again later.
    pub fn is_transient(&self) -> bool {
        matches!(self, LlmError::Transport { .. } | LlmError::EmptyResponse)
    }
}

#[async_trait]
pub trait CompletionBackend: Send + Sync {
    async fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError>;

    /// Short backend name for logs.
    fn name(&self) -> &str;
}

/// Shareable completion client with an in-flight request cap.
#[derive(Clone)]
pub struct LlmClient {
    backend: Arc<dyn CompletionBackend>,
    limiter: Arc<Semaphore>,
    default_model: String,
}

impl std::fmt::Debug for LlmClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LlmClient")
            .field("backend", &self.backend.name())
            .field("available_permits", &self.limiter.available_permits())
            .field("default_model", &self.default_model)
            .finish()
    }
}

impl LlmClient {
    pub fn new(backend: Arc<dyn CompletionBackend>, max_in_flight: usize) -> Self {
        Self {
            backend,
            limiter: Arc::new(Semaphore::new(max_in_flight.max(1))),
            default_model: DEFAULT_MODEL.to_string(),
        }
    }

    pub fn mock(seed: u64) -> Self {
        Self::new(Arc::new(make_mock(seed)), DEFAULT_MAX_IN_FLIGHT)
    }

    /// HTTP backend configured from `STAP_API_KEY`, `STAP_API_BASE` and `STAP_MODEL`.
    pub fn from_env() -> Result<Self, LlmError> {
        let backend = ChatCompletionsBackend::from_env()?;
        let mut client = Self::new(Arc::new(backend), DEFAULT_MAX_IN_FLIGHT);
        if let Ok(model) = std::env::var(ENV_MODEL) {
            if !model.trim().is_empty() {
                client.default_model = model;
            }
        }
        Ok(client)
    }

    /// Model id used by [`LlmClient::request`].
    pub fn default_model(&self) -> &str {
        &self.default_model
    }

    pub fn request(&self, prompt_text: impl Into<String>, temperature: f64) -> CompletionRequest {
        CompletionRequest::new(prompt_text, temperature).with_model(self.default_model.clone())
    }

    pub fn backend_name(&self) -> &str {
        self.backend.name()
    }

    pub async fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        request.validate()?;
        let _permit = self
            .limiter
            .acquire()
            .await
            .expect("the limiter semaphore is never closed");
        let mut response = self.backend.complete(request).await?;
        let trimmed = response.text.trim();
        if trimmed.is_empty() {
            return Err(LlmError::EmptyResponse);
        }
        if trimmed.len() != response.text.len() {
            response.text = trimmed.to_string();
        }
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Fixed(&'static str);

    #[async_trait]
    impl CompletionBackend for Fixed {
        async fn complete(&self, r: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
            Ok(CompletionResponse {
                text: self.0.to_string(),
                model_id: r.model_id.clone(),
                latency_ms: 0,
                usage: None,
            })
        }
        fn name(&self) -> &str {
            "fixed"
        }
    }

    #[tokio::test]
    async fn trims_and_rejects_empty() {
        let client = LlmClient::new(Arc::new(Fixed("  Use a loop.\n")), 2);
        let req = CompletionRequest::new("p", 0.5);
        assert_eq!(client.complete(&req).await.unwrap().text, "Use a loop.");
        let client = LlmClient::new(Arc::new(Fixed(" \n ")), 2);
        assert_eq!(client.complete(&req).await.unwrap_err(), LlmError::EmptyResponse);
    }

    #[tokio::test]
    async fn invalid_requests_rejected() {
        let client = LlmClient::mock(1);
        assert!(matches!(
            client.complete(&CompletionRequest::new("p", 1.5)).await,
            Err(LlmError::InvalidRequest(_))
        ));
        assert!(matches!(
            client.complete(&CompletionRequest::new("   ", 0.5)).await,
            Err(LlmError::InvalidRequest(_))
        ));
    }

    #[tokio::test]
    async fn request_not_mutated() {
        let client = LlmClient::mock(3);
        let req = CompletionRequest::new("Student code:\nx = 1", 0.5);
        let copy = req.clone();
        client.complete(&req).await.unwrap();
        assert_eq!(req, copy);
    }

    struct Slow {
        in_flight: AtomicUsize,
        peak: AtomicUsize,
    }

    #[async_trait]
    impl CompletionBackend for Slow {
        async fn complete(&self, r: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
            let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(now, Ordering::SeqCst);
            tokio::time::sleep(Duration::from_millis(20)).await;
            self.in_flight.fetch_sub(1, Ordering::SeqCst);
            Ok(CompletionResponse {
                text: "ok".into(),
                model_id: r.model_id.clone(),
                latency_ms: 20,
                usage: None,
            })
        }
        fn name(&self) -> &str {
            "slow"
        }
    }

    #[tokio::test(flavor = "multi_thread", worker_threads = 4)]
    async fn in_flight_cap_is_respected() {
        let backend = Arc::new(Slow {
            in_flight: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
        });
        let client = LlmClient::new(backend.clone(), 3);
        let tasks: Vec<_> = (0..12)
            .map(|i| {
                let c = client.clone();
                tokio::spawn(async move { c.complete(&CompletionRequest::new(format!("p{i}"), 0.5)).await })
            })
            .collect();
        for t in tasks {
            t.await.unwrap().unwrap();
        }
        assert_eq!(backend.peak.load(Ordering::SeqCst), 3);
    }
}
