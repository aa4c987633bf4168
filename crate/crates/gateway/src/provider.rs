//! Model providers: an OpenAI-compatible chat-completions client and a mock
//! that replays canned responses keyed by prompt hash.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("MissingApiKey: environment variable {0} is not set")]
    MissingApiKey(String),
    #[error("HttpError: status {status}: {body}")]
    Http { status: u16, body: String },
    #[error("request timed out")]
    Timeout,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
    #[error("mock fixture {path}: {reason}")]
    MockFixture { path: PathBuf, reason: String },
    #[error("mock fixture has no response for prompt {0}")]
    MockMiss(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    HttpChat,
    Mock,
}

impl std::str::FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "http_chat" => Ok(ProviderKind::HttpChat),
            "mock" => Ok(ProviderKind::Mock),
            _ => Err(format!(
                "unknown provider kind {s:?} (expected http_chat or mock)"
            )),
        }
    }
}

/// For `Mock`, `endpoint` is the path of the response fixture file.
#[derive(Debug, Clone, PartialEq)]
pub struct ProviderConfig {
    pub model_id: String,
    pub endpoint: String,
    pub api_key_env: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub provider_kind: ProviderKind,
}

pub const DEFAULT_API_KEY_ENV: &str = "OPENAI_API_KEY";
pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";

impl ProviderConfig {
    pub fn http_chat(
        model_id: impl Into<String>,
        endpoint: impl Into<String>,
        api_key_env: impl Into<String>,
    ) -> Self {
        ProviderConfig {
            model_id: model_id.into(),
            endpoint: endpoint.into(),
            api_key_env: api_key_env.into(),
            temperature: 0.0,
            max_tokens: 1024,
            provider_kind: ProviderKind::HttpChat,
        }
    }

    pub fn mock(model_id: impl Into<String>, fixture: impl AsRef<Path>) -> Self {
        ProviderConfig {
            model_id: model_id.into(),
            endpoint: fixture.as_ref().to_string_lossy().into_owned(),
            api_key_env: String::new(),
            temperature: 0.0,
            max_tokens: 1024,
            provider_kind: ProviderKind::Mock,
        }
    }

    pub fn api_key(&self) -> Result<String, GatewayError> {
        match std::env::var(&self.api_key_env) {
            Ok(key) if !key.is_empty() => Ok(key),
            _ => Err(GatewayError::MissingApiKey(self.api_key_env.clone())),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            retries: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(attempt)
    }
}

pub fn prompt_hash(prompt: &str) -> String {
    format!("{:x}", Sha256::digest(prompt.as_bytes()))
}

pub fn load_mock_fixture(path: &Path) -> Result<BTreeMap<String, String>, GatewayError> {
    let fail = |reason: String| GatewayError::MockFixture {
        path: path.to_path_buf(),
        reason,
    };
    let text = std::fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| fail(e.to_string()))
}

enum Backend {
    Http { agent: ureq::Agent },
    Mock { responses: BTreeMap<String, String> },
}

pub struct Provider {
    config: ProviderConfig,
    retry: RetryPolicy,
    backend: Backend,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReply,
}

#[derive(Deserialize)]
struct ChatReply {
    content: Option<String>,
}

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

fn is_transient(status: u16) -> bool {
    status == 408 || status == 429 || (500..600).contains(&status)
}

fn excerpt(body: &str) -> String {
    body.chars().take(200).collect()
}

fn is_timeout(err: &ureq::Transport) -> bool {
    let mut source = std::error::Error::source(err);
    while let Some(e) = source {
        if let Some(io) = e.downcast_ref::<io::Error>() {
            return matches!(
                io.kind(),
                io::ErrorKind::TimedOut | io::ErrorKind::WouldBlock
            );
        }
        source = e.source();
    }
    err.to_string().contains("timed out")
}

impl Provider {
    pub fn new(config: ProviderConfig) -> Result<Self, GatewayError> {
        Self::with_options(config, RetryPolicy::default(), DEFAULT_TIMEOUT)
    }

    /// Mock fixtures are read here; API keys are resolved per request.
    pub fn with_options(
        config: ProviderConfig,
        retry: RetryPolicy,
        timeout: Duration,
    ) -> Result<Self, GatewayError> {
        let backend = match config.provider_kind {
            ProviderKind::Mock => Backend::Mock {
                responses: load_mock_fixture(Path::new(&config.endpoint))?,
            },
            ProviderKind::HttpChat => Backend::Http {
                agent: ureq::AgentBuilder::new().timeout(timeout).build(),
            },
        };
        Ok(Provider {
            config,
            retry,
            backend,
        })
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    /// Fails early for providers that cannot work at all.
    pub fn check_ready(&self) -> Result<(), GatewayError> {
        match self.backend {
            Backend::Http { .. } => self.config.api_key().map(|_| ()),
            Backend::Mock { .. } => Ok(()),
        }
    }

    pub fn query(&self, prompt: &str) -> Result<String, GatewayError> {
        match &self.backend {
            Backend::Mock { responses } => {
                let hash = prompt_hash(prompt);
                log::debug!("mock request {hash}");
                responses
                    .get(&hash)
                    .cloned()
                    .ok_or(GatewayError::MockMiss(hash))
            }
            Backend::Http { agent } => self.query_http(agent, prompt),
        }
    }

    fn query_http(&self, agent: &ureq::Agent, prompt: &str) -> Result<String, GatewayError> {
        let key = self.config.api_key()?;
        let body = serde_json::to_string(&ChatRequest {
            model: &self.config.model_id,
            messages: [ChatMessage {
                role: "user",
                content: prompt,
            }],
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
        })
        .expect("request serializes");
        let mut attempt = 0;
        loop {
            log::debug!(
                "POST {} (Authorization: Bearer ***) {}",
                self.config.endpoint,
                body
            );
            let result = agent
                .post(&self.config.endpoint)
                .set("Authorization", &format!("Bearer {key}"))
                .set("Content-Type", "application/json")
                .send_string(&body);
            let err = match result {
                Ok(response) => {
                    let text = response
                        .into_string()
                        .map_err(|e| GatewayError::Transport(e.to_string()))?;
                    log::debug!("response {}", text.replace(&key, "***"));
                    return parse_chat_response(&text);
                }
                Err(ureq::Error::Status(status, response)) => {
                    let text = response
                        .into_string()
                        .unwrap_or_default()
                        .replace(&key, "***");
                    log::debug!("status {status}: {text}");
                    let err = GatewayError::Http {
                        status,
                        body: excerpt(&text),
                    };
                    if !is_transient(status) {
                        return Err(err);
                    }
                    err
                }
                Err(ureq::Error::Transport(t)) if is_timeout(&t) => GatewayError::Timeout,
                Err(ureq::Error::Transport(t)) => {
                    GatewayError::Transport(t.to_string().replace(&key, "***"))
                }
            };
            if attempt >= self.retry.retries {
                return Err(err);
            }
            let delay = self.retry.delay(attempt);
            log::debug!("{err}; retrying in {delay:?}");
            thread::sleep(delay);
            attempt += 1;
        }
    }
}

fn parse_chat_response(text: &str) -> Result<String, GatewayError> {
    let parsed: ChatResponse =
        serde_json::from_str(text).map_err(|e| GatewayError::MalformedResponse(e.to_string()))?;
    parsed
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| GatewayError::MalformedResponse("no assistant message".into()))
}
