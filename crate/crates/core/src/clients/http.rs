//! OpenAI-compatible `/v1/chat/completions` and `/v1/embeddings` clients.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde_json::{json, Value};
use ureq::Agent;

use super::{CallKey, ChatModel, ClientError, Embedder, Result};

/// Retries after the first attempt, on transport errors and 5xx replies.
pub const MAX_RETRIES: usize = 3;
pub const DEFAULT_BACKOFF: Duration = Duration::from_millis(500);

#[derive(Debug, Clone, PartialEq)]
pub struct ChatEndpoint {
    pub base_url: String,
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout: Duration,
    /// Name of the environment variable holding the bearer token.
    pub auth_token_env: Option<String>,
}

impl ChatEndpoint {
    pub fn new(base_url: impl Into<String>, model_id: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model_id: model_id.into(),
            temperature: 0.7,
            max_tokens: 256,
            timeout: Duration::from_secs(60),
            auth_token_env: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_url.trim().is_empty() {
            return Err(ClientError::InvalidConfig("chat base_url is empty".into()));
        }
        if self.max_tokens == 0 {
            return Err(ClientError::InvalidConfig("max_tokens must be at least 1".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(ClientError::InvalidConfig("temperature must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingEndpoint {
    pub base_url: String,
    pub model_id: String,
    pub timeout: Duration,
    pub auth_token_env: Option<String>,
    pub dim: usize,
}

impl EmbeddingEndpoint {
    pub fn new(base_url: impl Into<String>, model_id: impl Into<String>, dim: usize) -> Self {
        Self {
            base_url: base_url.into(),
            model_id: model_id.into(),
            timeout: Duration::from_secs(60),
            auth_token_env: None,
            dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_url.trim().is_empty() {
            return Err(ClientError::InvalidConfig("embedding base_url is empty".into()));
        }
        if self.dim == 0 {
            return Err(ClientError::InvalidConfig("embedding dim must be at least 1".into()));
        }
        Ok(())
    }
}

/// Shared POST-with-retry machinery.
#[derive(Debug)]
struct Poster {
    agent: Agent,
    auth_token_env: Option<String>,
    backoff: Duration,
    retries: AtomicUsize,
}

impl Poster {
    fn new(timeout: Duration, auth_token_env: Option<String>) -> Self {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            auth_token_env,
            backoff: DEFAULT_BACKOFF,
            retries: AtomicUsize::new(0),
        }
    }

    fn post(&self, url: &str, body: &Value) -> Result<Value> {
        let token = self
            .auth_token_env
            .as_deref()
            .and_then(|name| std::env::var(name).ok())
            .filter(|t| !t.is_empty());
        let mut attempt = 0;
        loop {
            let mut req = self.agent.post(url).header("Content-Type", "application/json");
            if let Some(t) = &token {
                req = req.header("Authorization", &format!("Bearer {t}"));
            }
            let outcome = match req.send_json(body) {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    let text = resp.body_mut().read_to_string().unwrap_or_default();
                    if (200..300).contains(&status) {
                        return serde_json::from_str(&text)
                            .map_err(|e| ClientError::Malformed(format!("invalid JSON: {e}")));
                    }
                    ClientError::Status { status, body: text }
                }
                Err(e) => ClientError::Transport {
                    attempts: attempt + 1,
                    message: e.to_string(),
                },
            };
            let retryable = match &outcome {
                ClientError::Status { status, .. } => *status >= 500,
                ClientError::Transport { .. } => true,
                _ => false,
            };
            if !retryable || attempt >= MAX_RETRIES {
                return Err(outcome);
            }
            log::debug!("retrying {url} after: {outcome}");
            std::thread::sleep(self.backoff * 2u32.pow(attempt as u32));
            self.retries.fetch_add(1, Ordering::SeqCst);
            attempt += 1;
        }
    }
}

fn endpoint_url(base: &str, path: &str) -> String {
    format!("{}{}", base.trim_end_matches('/'), path)
}

/// Blocking chat-completions client.
#[derive(Debug)]
pub struct ChatClient {
    endpoint: ChatEndpoint,
    poster: Poster,
}

impl ChatClient {
    pub fn new(endpoint: ChatEndpoint) -> Result<Self> {
        endpoint.validate()?;
        let poster = Poster::new(endpoint.timeout, endpoint.auth_token_env.clone());
        Ok(Self { endpoint, poster })
    }

    /// Base delay before the first retry; doubles on each further retry.
    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.poster.backoff = backoff;
        self
    }

    /// Retries performed so far by this client.
    pub fn retry_count(&self) -> usize {
        self.poster.retries.load(Ordering::SeqCst)
    }

    pub fn endpoint(&self) -> &ChatEndpoint {
        &self.endpoint
    }

    pub fn send(&self, prompt: &str) -> Result<String> {
        let body = json!({
            "model": self.endpoint.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.endpoint.temperature,
            "max_tokens": self.endpoint.max_tokens,
        });
        let url = endpoint_url(&self.endpoint.base_url, "/v1/chat/completions");
        let reply = self.poster.post(&url, &body)?;
        let content = reply
            .pointer("/choices/0/message/content")
            .ok_or_else(|| ClientError::Malformed("missing choices[0].message.content".into()))?
            .as_str()
            .ok_or_else(|| ClientError::Malformed("message content is not a string".into()))?;
        if content.is_empty() {
            return Err(ClientError::EmptyContent);
        }
        Ok(content.to_string())
    }
}

impl ChatModel for ChatClient {
    fn complete(&self, prompt: &str, _key: CallKey) -> Result<String> {
        self.send(prompt)
    }
}

/// Blocking embeddings client.
#[derive(Debug)]
pub struct EmbeddingClient {
    endpoint: EmbeddingEndpoint,
    poster: Poster,
}

impl EmbeddingClient {
    pub fn new(endpoint: EmbeddingEndpoint) -> Result<Self> {
        endpoint.validate()?;
        let poster = Poster::new(endpoint.timeout, endpoint.auth_token_env.clone());
        Ok(Self { endpoint, poster })
    }

    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.poster.backoff = backoff;
        self
    }

    pub fn retry_count(&self) -> usize {
        self.poster.retries.load(Ordering::SeqCst)
    }
}

impl Embedder for EmbeddingClient {
    fn id(&self) -> String {
        self.endpoint.model_id.clone()
    }

    fn dim(&self) -> usize {
        self.endpoint.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let body = json!({"model": self.endpoint.model_id, "input": text});
        let url = endpoint_url(&self.endpoint.base_url, "/v1/embeddings");
        let reply = self.poster.post(&url, &body)?;
        let values = reply
            .pointer("/data/0/embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| ClientError::Malformed("missing data[0].embedding".into()))?;
        let v = values
            .iter()
            .map(|x| {
                x.as_f64()
                    .ok_or_else(|| ClientError::Malformed(format!("non-numeric embedding entry {x}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if v.len() != self.endpoint.dim {
            return Err(ClientError::DimensionMismatch {
                expected: self.endpoint.dim,
                found: v.len(),
            });
        }
        Ok(v)
    }
}

/// One-shot chat completion.
pub fn complete(endpoint: &ChatEndpoint, prompt: &str) -> Result<String> {
    ChatClient::new(endpoint.clone())?.send(prompt)
}

/// One-shot embedding request.
pub fn embed_text(endpoint: &EmbeddingEndpoint, text: &str) -> Result<Vec<f64>> {
    EmbeddingClient::new(endpoint.clone())?.embed(text)
}
