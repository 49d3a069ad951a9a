//! Live backend for OpenAI-compatible chat-completion endpoints.
//!
//! The API key comes from the `RLLM_API_KEY` environment variable and from
//! nowhere else; endpoints may be passed in or read from `RLLM_ENDPOINT`.
//! Transport failures and 5xx responses are retried with capped exponential
//! backoff and full jitter; 4xx responses fail immediately.

use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BackendKind, BackendReply, ChatBackend, ChatRequest, ClientError, Message};

pub const API_KEY_VAR: &str = "RLLM_API_KEY";
pub const ENDPOINT_VAR: &str = "RLLM_ENDPOINT";

#[derive(Debug, Clone)]
pub struct HttpConfig {
    /// Base URL or full chat-completions URL. `None` falls back to
    /// `RLLM_ENDPOINT`.
    pub endpoint: Option<String>,
    pub model: String,
    pub timeout: Duration,
    pub max_attempts: u32,
    pub backoff_base: Duration,
}

impl HttpConfig {
    pub fn new(model: impl Into<String>) -> Self {
        HttpConfig {
            endpoint: None,
            model: model.into(),
            timeout: Duration::from_secs(60),
            max_attempts: 3,
            backoff_base: Duration::from_secs(1),
        }
    }

    pub fn endpoint(mut self, endpoint: impl Into<String>) -> Self {
        self.endpoint = Some(endpoint.into());
        self
    }
}

pub struct HttpBackend {
    url: String,
    api_key: String,
    model: String,
    max_attempts: u32,
    backoff_base: Duration,
    agent: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct ApiRequest<'a> {
    model: &'a str,
    messages: &'a [Message],
    temperature: f64,
    top_p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_tokens: Option<u32>,
}

#[derive(Deserialize)]
struct ApiResponse {
    choices: Vec<ApiChoice>,
    #[serde(default)]
    usage: Option<ApiUsage>,
}

#[derive(Deserialize)]
struct ApiChoice {
    message: ApiMessage,
}

#[derive(Deserialize)]
struct ApiMessage {
    content: String,
}

#[derive(Deserialize)]
struct ApiUsage {
    prompt_tokens: u64,
    completion_tokens: u64,
}

fn completions_url(endpoint: &str) -> String {
    let trimmed = endpoint.trim_end_matches('/');
    if trimmed.ends_with("/chat/completions") {
        trimmed.to_string()
    } else {
        format!("{trimmed}/chat/completions")
    }
}

impl HttpBackend {
    /// Reads the API key from the environment. Fails fast when either the
    /// key or the endpoint is absent so misconfiguration surfaces before
    /// the first utterance, not during the run.
    pub fn new(config: HttpConfig) -> Result<Self, ClientError> {
        let api_key = std::env::var(API_KEY_VAR).map_err(|_| {
            ClientError::ConfigMissing(format!("{API_KEY_VAR} environment variable is not set"))
        })?;
        Self::with_api_key(config, api_key)
    }

    /// Test seam; production paths go through [`HttpBackend::new`] so the
    /// key can only ever come from the environment.
    pub fn with_api_key(config: HttpConfig, api_key: String) -> Result<Self, ClientError> {
        let endpoint = match config.endpoint {
            Some(e) => e,
            None => std::env::var(ENDPOINT_VAR).map_err(|_| {
                ClientError::ConfigMissing(format!(
                    "no endpoint given and {ENDPOINT_VAR} environment variable is not set"
                ))
            })?,
        };
        if config.max_attempts == 0 {
            return Err(ClientError::ConfigMissing("max_attempts must be >= 1".into()));
        }
        let agent = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        Ok(HttpBackend {
            url: completions_url(&endpoint),
            api_key,
            model: config.model,
            max_attempts: config.max_attempts,
            backoff_base: config.backoff_base,
            agent,
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn call_once(&self, request: &ChatRequest) -> Result<BackendReply, ClientError> {
        let body = ApiRequest {
            model: &self.model,
            messages: &request.messages,
            temperature: request.temperature,
            top_p: request.top_p,
            max_tokens: request.max_tokens,
        };
        let response = self
            .agent
            .post(&self.url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| ClientError::Transport(e.to_string()))?;

        let status = response.status();
        let text = response.text().map_err(|e| ClientError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(ClientError::Api {
                status: status.as_u16(),
                message: text.chars().take(500).collect(),
            });
        }
        let parsed: ApiResponse = serde_json::from_str(&text)
            .map_err(|e| ClientError::MalformedResponse(e.to_string()))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| ClientError::MalformedResponse("no choices in response".into()))?;
        Ok(BackendReply {
            content: choice.message.content,
            tokens_in: parsed.usage.as_ref().map(|u| u.prompt_tokens),
            tokens_out: parsed.usage.as_ref().map(|u| u.completion_tokens),
        })
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, request: &ChatRequest) -> Result<BackendReply, ClientError> {
        let mut attempt = 0;
        loop {
            attempt += 1;
            match self.call_once(request) {
                Ok(reply) => return Ok(reply),
                Err(err) if err.retryable() && attempt < self.max_attempts => {
                    // Full jitter: sleep uniformly within the doubled window.
                    let cap = self.backoff_base.saturating_mul(1 << (attempt - 1));
                    let sleep = cap.mul_f64(rand::thread_rng().gen_range(0.0..=1.0));
                    std::thread::sleep(sleep);
                }
                Err(err) => return Err(err),
            }
        }
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Live
    }
}
