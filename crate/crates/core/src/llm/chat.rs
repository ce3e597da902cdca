use crate::net::NetError;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub model_name: String,
}

impl ChatRequest {
    /// A system message, if present, must come first and only once.
    pub fn validate(&self) -> Result<(), LlmError> {
        if let Some(pos) = self.messages.iter().rposition(|m| m.role == Role::System) {
            if pos != 0 {
                return Err(LlmError::InvalidRequest("system message must be the first message".into()));
            }
        }
        if self.temperature < 0.0 || !self.temperature.is_finite() {
            return Err(LlmError::InvalidRequest(format!("temperature {} is negative", self.temperature)));
        }
        if self.max_tokens == 0 {
            return Err(LlmError::InvalidRequest("max_tokens must be positive".into()));
        }
        Ok(())
    }

    /// Text of the last user message.
    pub fn last_user(&self) -> &str {
        self.messages.iter().rev().find(|m| m.role == Role::User).map_or("", |m| m.content.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub usage: Option<Usage>,
    pub latency_ms: u64,
}

/// Which pipeline step issued a request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    ZeroShot,
    Icl,
    Scientist,
    Reviewer,
    Judge,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::ZeroShot => "zero_shot",
            Stage::Icl => "icl",
            Stage::Scientist => "scientist",
            Stage::Reviewer => "reviewer",
            Stage::Judge => "judge",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Metadata that travels with a request. Real backends ignore it; mocks use
/// it to pick replies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestContext {
    pub instance_id: String,
    pub stage: Stage,
    /// 0 for the first ask, then 1, 2 for re-asks.
    pub attempt: u32,
}

impl RequestContext {
    pub fn new(instance_id: impl Into<String>, stage: Stage) -> Self {
        Self { instance_id: instance_id.into(), stage, attempt: 0 }
    }

    pub fn reask(&self, attempt: u32) -> Self {
        Self { attempt, ..self.clone() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("authentication rejected by {url} (HTTP {status})")]
    Auth { url: String, status: u16 },
    #[error("gave up after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: NetError },
    #[error(transparent)]
    Net(NetError),
    #[error("response does not match the chat-completions schema: {0}")]
    Schema(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("mock backend: {0}")]
    Mock(String),
}

impl LlmError {
    /// Whether the failure came from reaching (or being barred from) the network.
    pub fn is_network(&self) -> bool {
        matches!(self, LlmError::Net(_) | LlmError::Exhausted { .. })
    }
}

pub trait ChatBackend: Send + Sync {
    /// Name shown in reports.
    fn name(&self) -> String;
    fn complete(&self, ctx: &RequestContext, request: &ChatRequest) -> Result<ChatResponse, LlmError>;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(messages: Vec<ChatMessage>) -> ChatRequest {
        ChatRequest { messages, temperature: 0.0, max_tokens: 10, model_name: "m".into() }
    }

    #[test]
    fn system_message_must_lead() {
        assert!(req(vec![ChatMessage::system("s"), ChatMessage::user("u")]).validate().is_ok());
        assert!(req(vec![ChatMessage::user("u")]).validate().is_ok());
        assert!(req(vec![ChatMessage::user("u"), ChatMessage::system("s")]).validate().is_err());
        let mut r = req(vec![]);
        r.max_tokens = 0;
        assert!(r.validate().is_err());
    }

    #[test]
    fn last_user_message() {
        let r = req(vec![ChatMessage::user("a"), ChatMessage::assistant("b"), ChatMessage::user("c")]);
        assert_eq!(r.last_user(), "c");
    }
}
