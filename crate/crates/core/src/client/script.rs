//! Replay backend: canned replies keyed by request tag.
//!
//! A script is a JSON object mapping tags to reply arrays. Each reply is
//! either a bare string or `{"content", "tokens_in", "tokens_out"}`;
//! bare strings leave token counts to the client's estimator. Replies for
//! one tag are consumed front to back, so repeated calls with the same tag
//! (iterative correction rounds) walk the array in order.

use std::collections::HashMap;
use std::collections::VecDeque;
use std::path::Path;
use std::sync::Mutex;

use serde::Deserialize;

use super::{BackendKind, BackendReply, ChatBackend, ChatRequest, ClientError};

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
enum RawReply {
    Text(String),
    Full { content: String, tokens_in: u64, tokens_out: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptReply {
    pub content: String,
    pub tokens_in: Option<u64>,
    pub tokens_out: Option<u64>,
}

impl From<RawReply> for ScriptReply {
    fn from(raw: RawReply) -> Self {
        match raw {
            RawReply::Text(content) => {
                ScriptReply { content, tokens_in: None, tokens_out: None }
            }
            RawReply::Full { content, tokens_in, tokens_out } => ScriptReply {
                content,
                tokens_in: Some(tokens_in),
                tokens_out: Some(tokens_out),
            },
        }
    }
}

impl From<&str> for ScriptReply {
    fn from(content: &str) -> Self {
        ScriptReply { content: content.to_string(), tokens_in: None, tokens_out: None }
    }
}

#[derive(Debug, Default)]
pub struct ScriptedBackend {
    replies: Mutex<HashMap<String, VecDeque<ScriptReply>>>,
}

impl ScriptedBackend {
    pub fn new() -> Self {
        ScriptedBackend::default()
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        let raw: HashMap<String, Vec<RawReply>> = serde_json::from_str(json)?;
        let replies = raw
            .into_iter()
            .map(|(tag, list)| (tag, list.into_iter().map(ScriptReply::from).collect()))
            .collect();
        Ok(ScriptedBackend { replies: Mutex::new(replies) })
    }

    pub fn from_file(path: &Path) -> Result<Self, ClientError> {
        let json = std::fs::read_to_string(path)
            .map_err(|e| ClientError::ConfigMissing(format!("script {}: {e}", path.display())))?;
        Self::from_json(&json)
            .map_err(|e| ClientError::ConfigMissing(format!("script {}: {e}", path.display())))
    }

    /// Queue one more reply for `tag`.
    pub fn push(&self, tag: impl Into<String>, reply: impl Into<ScriptReply>) {
        self.replies
            .lock()
            .expect("script poisoned")
            .entry(tag.into())
            .or_default()
            .push_back(reply.into());
    }

    /// Replies loaded but never consumed; zero after a fully covered run.
    pub fn unused(&self) -> usize {
        self.replies.lock().expect("script poisoned").values().map(VecDeque::len).sum()
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, request: &ChatRequest) -> Result<BackendReply, ClientError> {
        let mut replies = self.replies.lock().expect("script poisoned");
        let queue = replies
            .get_mut(&request.tag)
            .ok_or_else(|| ClientError::ScriptMissing(request.tag.clone()))?;
        let reply = queue
            .pop_front()
            .ok_or_else(|| ClientError::ScriptExhausted(request.tag.clone()))?;
        Ok(BackendReply {
            content: reply.content,
            tokens_in: reply.tokens_in,
            tokens_out: reply.tokens_out,
        })
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Scripted
    }
}
