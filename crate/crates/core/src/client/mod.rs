//! Chat-completion client with pluggable backends and a token-cost ledger.
//!
//! Two backends exist: a live HTTP backend speaking the OpenAI-compatible
//! chat API, and a scripted backend replaying canned replies keyed by
//! request tag for offline, deterministic runs. The [`Client`] wrapper
//! validates requests, fills in token estimates when a backend reports
//! none, and books every successful call into the ledger under the stage
//! named by the request tag.

mod http;
mod script;

use std::collections::BTreeMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{HttpBackend, HttpConfig, API_KEY_VAR, ENDPOINT_VAR};
pub use script::{ScriptReply, ScriptedBackend};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Message { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Message { role: Role::Assistant, content: content.into() }
    }
}

pub const DEFAULT_TEMPERATURE: f64 = 0.2;
pub const DEFAULT_TOP_P: f64 = 0.8;

/// One chat call. The tag names the pipeline stage and the utterance the
/// call belongs to, `"{stage}:{utterance-id}"`; the ledger books the call
/// under everything before the first `:`, and the scripted backend uses the
/// whole tag as its replay key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub tag: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub top_p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

impl ChatRequest {
    pub fn new(tag: impl Into<String>, messages: Vec<Message>) -> Self {
        ChatRequest {
            tag: tag.into(),
            messages,
            temperature: DEFAULT_TEMPERATURE,
            top_p: DEFAULT_TOP_P,
            max_tokens: None,
        }
    }

    pub fn stage(&self) -> &str {
        self.tag.split(':').next().unwrap_or(&self.tag)
    }

    fn prompt_chars(&self) -> usize {
        self.messages.iter().map(|m| m.content.chars().count()).sum()
    }
}

/// What a backend returns; token counts are `None` when the backend cannot
/// report real usage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendReply {
    pub content: String,
    pub tokens_in: Option<u64>,
    pub tokens_out: Option<u64>,
}

/// A completed call. `estimated` marks token counts derived from character
/// counts rather than reported by the backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub backend: BackendKind,
    pub estimated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Live,
    Scripted,
}

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("no scripted reply for key `{0}`")]
    ScriptMissing(String),
    #[error("scripted replies for key `{0}` are exhausted")]
    ScriptExhausted(String),
    #[error("missing configuration: {0}")]
    ConfigMissing(String),
    #[error("api error (status {status}): {message}")]
    Api { status: u16, message: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed api response: {0}")]
    MalformedResponse(String),
}

impl ClientError {
    /// Only transport failures and server-side errors are worth retrying.
    pub fn retryable(&self) -> bool {
        match self {
            ClientError::Transport(_) => true,
            ClientError::Api { status, .. } => *status >= 500,
            _ => false,
        }
    }
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<BackendReply, ClientError>;
    fn kind(&self) -> BackendKind;
}

/// Lets callers keep a handle on a backend (e.g. to inspect a script after a
/// run) while the client owns its own reference.
impl<B: ChatBackend> ChatBackend for std::sync::Arc<B> {
    fn complete(&self, request: &ChatRequest) -> Result<BackendReply, ClientError> {
        (**self).complete(request)
    }

    fn kind(&self) -> BackendKind {
        (**self).kind()
    }
}

/// Per-stage booked cost.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCost {
    pub calls: u64,
    pub tokens_in: u64,
    pub tokens_out: u64,
    /// True when any booked call used estimated counts.
    pub estimated: bool,
}

impl StageCost {
    fn add(&mut self, tokens_in: u64, tokens_out: u64, estimated: bool) {
        self.calls += 1;
        self.tokens_in += tokens_in;
        self.tokens_out += tokens_out;
        self.estimated |= estimated;
    }
}

/// Thread-safe token accounting, partitioned by stage name. BTreeMap keys
/// keep report order stable across runs.
#[derive(Debug, Default)]
pub struct CostLedger {
    stages: Mutex<BTreeMap<String, StageCost>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerReport {
    pub stages: BTreeMap<String, StageCost>,
    pub total: StageCost,
}

impl CostLedger {
    pub fn record(&self, stage: &str, tokens_in: u64, tokens_out: u64, estimated: bool) {
        let mut stages = self.stages.lock().expect("ledger poisoned");
        stages.entry(stage.to_string()).or_default().add(tokens_in, tokens_out, estimated);
    }

    pub fn report(&self) -> LedgerReport {
        let stages = self.stages.lock().expect("ledger poisoned").clone();
        let mut total = StageCost::default();
        for cost in stages.values() {
            total.calls += cost.calls;
            total.tokens_in += cost.tokens_in;
            total.tokens_out += cost.tokens_out;
            total.estimated |= cost.estimated;
        }
        LedgerReport { stages, total }
    }
}

/// Rough token estimate when a backend reports no usage: one token per four
/// characters, rounded up.
fn estimate_tokens(chars: usize) -> u64 {
    (chars as u64).div_ceil(4)
}

pub struct Client {
    backend: Box<dyn ChatBackend>,
    ledger: CostLedger,
}

impl Client {
    pub fn new(backend: Box<dyn ChatBackend>) -> Self {
        Client { backend, ledger: CostLedger::default() }
    }

    pub fn scripted(script: ScriptedBackend) -> Self {
        Client::new(Box::new(script))
    }

    pub fn http(config: HttpConfig) -> Result<Self, ClientError> {
        Ok(Client::new(Box::new(HttpBackend::new(config)?)))
    }

    pub fn kind(&self) -> BackendKind {
        self.backend.kind()
    }

    /// Validate, dispatch, estimate missing token counts, and book the call.
    /// The ledger is updated exactly once, and only on success.
    pub fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ClientError> {
        validate(request)?;
        let reply = self.backend.complete(request)?;
        let estimated = reply.tokens_in.is_none() || reply.tokens_out.is_none();
        let tokens_in = reply.tokens_in.unwrap_or_else(|| estimate_tokens(request.prompt_chars()));
        let tokens_out =
            reply.tokens_out.unwrap_or_else(|| estimate_tokens(reply.content.chars().count()));
        self.ledger.record(request.stage(), tokens_in, tokens_out, estimated);
        Ok(ChatResponse {
            content: reply.content,
            tokens_in,
            tokens_out,
            backend: self.backend.kind(),
            estimated,
        })
    }

    pub fn ledger_report(&self) -> LedgerReport {
        self.ledger.report()
    }
}

fn validate(request: &ChatRequest) -> Result<(), ClientError> {
    if request.messages.is_empty() {
        return Err(ClientError::InvalidRequest("no messages".into()));
    }
    if request.messages[0].role == Role::Assistant {
        return Err(ClientError::InvalidRequest(
            "conversation must open with a system or user message".into(),
        ));
    }
    if !(0.0..=2.0).contains(&request.temperature) || !request.temperature.is_finite() {
        return Err(ClientError::InvalidRequest(format!(
            "temperature {} outside [0, 2]",
            request.temperature
        )));
    }
    if !(request.top_p > 0.0 && request.top_p <= 1.0) {
        return Err(ClientError::InvalidRequest(format!(
            "top_p {} outside (0, 1]",
            request.top_p
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(&'static str);

    impl ChatBackend for Fixed {
        fn complete(&self, _request: &ChatRequest) -> Result<BackendReply, ClientError> {
            Ok(BackendReply { content: self.0.to_string(), tokens_in: None, tokens_out: None })
        }

        fn kind(&self) -> BackendKind {
            BackendKind::Scripted
        }
    }

    fn req(tag: &str) -> ChatRequest {
        ChatRequest::new(tag, vec![Message::user("hello")])
    }

    #[test]
    fn defaults_pin_sampling_parameters() {
        let r = req("detect:u1");
        assert_eq!(r.temperature, 0.2);
        assert_eq!(r.top_p, 0.8);
    }

    #[test]
    fn stage_is_the_tag_prefix() {
        assert_eq!(req("detect:u1").stage(), "detect");
        assert_eq!(req("plain:u1+u2").stage(), "plain");
        assert_eq!(req("untagged").stage(), "untagged");
    }

    #[test]
    fn empty_or_assistant_led_conversations_are_rejected() {
        let client = Client::new(Box::new(Fixed("x")));
        let bad = ChatRequest::new("t", vec![]);
        assert!(matches!(client.complete(&bad), Err(ClientError::InvalidRequest(_))));
        let bad = ChatRequest::new("t", vec![Message::assistant("hi")]);
        assert!(matches!(client.complete(&bad), Err(ClientError::InvalidRequest(_))));
    }

    #[test]
    fn sampling_parameters_are_range_checked() {
        let client = Client::new(Box::new(Fixed("x")));
        let mut r = req("t");
        r.temperature = 2.5;
        assert!(matches!(client.complete(&r), Err(ClientError::InvalidRequest(_))));
        let mut r = req("t");
        r.top_p = 0.0;
        assert!(matches!(client.complete(&r), Err(ClientError::InvalidRequest(_))));
        let mut r = req("t");
        r.top_p = 1.0;
        assert!(client.complete(&r).is_ok());
    }

    #[test]
    fn missing_usage_is_estimated_at_four_chars_per_token() {
        let client = Client::new(Box::new(Fixed("exactly16charsxx")));
        let resp = client.complete(&req("detect:u1")).unwrap();
        // Prompt "hello" is 5 chars -> 2 tokens; reply 16 chars -> 4 tokens.
        assert_eq!(resp.tokens_in, 2);
        assert_eq!(resp.tokens_out, 4);
        assert!(resp.estimated);
    }

    #[test]
    fn ledger_partitions_by_stage_and_sums_totals() {
        let client = Client::new(Box::new(Fixed("abcd")));
        client.complete(&req("detect:u1")).unwrap();
        client.complete(&req("detect:u2")).unwrap();
        client.complete(&req("correct:u1")).unwrap();
        let report = client.ledger_report();
        assert_eq!(report.stages["detect"].calls, 2);
        assert_eq!(report.stages["correct"].calls, 1);
        assert_eq!(report.total.calls, 3);
        assert_eq!(
            report.total.tokens_in,
            report.stages.values().map(|s| s.tokens_in).sum::<u64>()
        );
        assert!(report.total.estimated);
    }

    #[test]
    fn failed_calls_are_not_booked() {
        struct Failing;
        impl ChatBackend for Failing {
            fn complete(&self, _request: &ChatRequest) -> Result<BackendReply, ClientError> {
                Err(ClientError::Transport("down".into()))
            }
            fn kind(&self) -> BackendKind {
                BackendKind::Live
            }
        }
        let client = Client::new(Box::new(Failing));
        assert!(client.complete(&req("detect:u1")).is_err());
        assert_eq!(client.ledger_report().total.calls, 0);
    }

    #[test]
    fn retryability_follows_error_class() {
        assert!(ClientError::Transport("x".into()).retryable());
        assert!(ClientError::Api { status: 503, message: String::new() }.retryable());
        assert!(!ClientError::Api { status: 429, message: String::new() }.retryable());
        assert!(!ClientError::ScriptMissing("k".into()).retryable());
    }
}
