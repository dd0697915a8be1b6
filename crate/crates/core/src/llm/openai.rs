//! OpenAI-compatible chat-completions over HTTP.

use std::time::{Duration, Instant};

use async_trait::async_trait;
use rand::Rng;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

use super::{
    CompletionBackend, CompletionRequest, CompletionResponse, LlmError, Usage, DEFAULT_API_BASE,
    ENV_API_BASE, ENV_API_KEY,
};

/// Exponential backoff with up to 25 % added jitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            base_delay: Duration::from_secs(1),
            max_delay: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (0-based).
    pub fn delay(&self, retry: u32) -> Duration {
        let exp = self.base_delay.saturating_mul(1u32 << retry.min(16));
        let jitter = rand::rng().random_range(0.0..0.25);
        exp.mul_f64(1.0 + jitter).min(self.max_delay)
    }
}

pub struct ChatCompletionsBackend {
    http: reqwest::Client,
    endpoint: String,
    api_key: String,
    retry: RetryPolicy,
}

impl std::fmt::Debug for ChatCompletionsBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChatCompletionsBackend")
            .field("endpoint", &self.endpoint)
            .field("api_key", &"<redacted>")
            .field("retry", &self.retry)
            .finish()
    }
}

#[derive(Serialize)]
struct ChatBody<'a> {
    model: &'a str,
    messages: [Message<'a>; 1],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatReply {
    #[serde(default)]
    model: Option<String>,
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ReplyMessage,
}

#[derive(Deserialize)]
struct ReplyMessage {
    #[serde(default)]
    content: Option<String>,
}

enum Attempt {
    Done(CompletionResponse),
    Retry(String, Option<Duration>),
}

impl ChatCompletionsBackend {
    /// `base_url` is the API root, e.g. `https://api.openai.com/v1`.
    pub fn new(base_url: &str, api_key: impl Into<String>) -> Result<Self, LlmError> {
        let api_key = api_key.into();
        if api_key.trim().is_empty() {
            return Err(LlmError::Credential("API key is empty".into()));
        }
        let http = reqwest::Client::builder()
            .build()
            .map_err(|e| LlmError::Transport {
                attempts: 0,
                detail: e.to_string(),
            })?;
        Ok(Self {
            http,
            endpoint: format!("{}/chat/completions", base_url.trim_end_matches('/')),
            api_key,
            retry: RetryPolicy::default(),
        })
    }

    pub fn from_env() -> Result<Self, LlmError> {
        let key = std::env::var(ENV_API_KEY)
            .map_err(|_| LlmError::Credential(format!("{ENV_API_KEY} is not set")))?;
        let base = std::env::var(ENV_API_BASE).unwrap_or_else(|_| DEFAULT_API_BASE.to_string());
        Self::new(&base, key)
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    async fn attempt(&self, request: &CompletionRequest) -> Result<Attempt, LlmError> {
        let body = ChatBody {
            model: &request.model_id,
            messages: [Message {
                role: "user",
                content: &request.prompt_text,
            }],
            temperature: request.temperature,
            max_tokens: request.max_tokens,
        };
        let started = Instant::now();
        let sent = self
            .http
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .timeout(request.timeout)
            .json(&body)
            .send()
            .await;
        let response = match sent {
            Ok(r) => r,
            Err(e) if e.is_timeout() || e.is_connect() || e.is_request() => {
                return Ok(Attempt::Retry(without_url(&e), None))
            }
            Err(e) => return Err(LlmError::Decode(without_url(&e))),
        };
        let status = response.status();
        if status == StatusCode::UNAUTHORIZED || status == StatusCode::FORBIDDEN {
            return Err(LlmError::Credential(format!("endpoint rejected the credential (HTTP {})", status.as_u16())));
        }
        if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
            let retry_after = response
                .headers()
                .get(reqwest::header::RETRY_AFTER)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<u64>().ok())
                .map(Duration::from_secs);
            return Ok(Attempt::Retry(format!("HTTP {}", status.as_u16()), retry_after));
        }
        if !status.is_success() {
            let detail = response.text().await.unwrap_or_default();
            return Err(LlmError::Http {
                status: status.as_u16(),
                detail: detail.chars().take(500).collect(),
            });
        }
        let reply: ChatReply = match response.json().await {
            Ok(r) => r,
            Err(e) if e.is_timeout() => return Ok(Attempt::Retry(without_url(&e), None)),
            Err(e) => return Err(LlmError::Decode(without_url(&e))),
        };
        let text = reply
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .unwrap_or_default();
        if text.trim().is_empty() {
            return Err(LlmError::EmptyResponse);
        }
        Ok(Attempt::Done(CompletionResponse {
            text: text.trim().to_string(),
            model_id: reply.model.unwrap_or_else(|| request.model_id.clone()),
            latency_ms: started.elapsed().as_millis() as u64,
            usage: reply.usage,
        }))
    }
}

fn without_url(e: &reqwest::Error) -> String {
    let mut e = e.to_string();
    if let Some(i) = e.find(" for url") {
        e.truncate(i);
    }
    e
}

#[async_trait]
impl CompletionBackend for ChatCompletionsBackend {
    async fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(request).await? {
                Attempt::Done(response) => return Ok(response),
                Attempt::Retry(detail, retry_after) => {
                    if attempts > self.retry.max_retries {
                        return Err(LlmError::Transport { attempts, detail });
                    }
                    let mut delay = self.retry.delay(attempts - 1);
                    if let Some(hint) = retry_after {
                        delay = delay.max(hint.min(self.retry.max_delay));
                    }
                    tracing::warn!(attempt = attempts, %detail, ?delay, "retrying completion request");
                    tokio::time::sleep(delay).await;
                }
            }
        }
    }

    fn name(&self) -> &str {
        "chat-completions"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_grows_and_is_capped() {
        let p = RetryPolicy::default();
        for retry in 0..3 {
            let d = p.delay(retry);
            let base = Duration::from_secs(1 << retry);
            assert!(d >= base && d <= base.mul_f64(1.25), "{d:?}");
        }
        assert_eq!(p.delay(10), p.max_delay);
    }

    #[test]
    fn empty_key_is_credential_error() {
        assert!(matches!(
            ChatCompletionsBackend::new("http://localhost", " "),
            Err(LlmError::Credential(_))
        ));
    }

    #[test]
    fn debug_output_hides_key() {
        let b = ChatCompletionsBackend::new("http://localhost:1/v1/", "sk-secret-123").unwrap();
        let dbg = format!("{b:?}");
        assert!(!dbg.contains("sk-secret-123"));
        assert_eq!(b.endpoint(), "http://localhost:1/v1/chat/completions");
    }
}
