use super::chat::{ChatBackend, ChatRequest, ChatResponse, LlmError, RequestContext, Usage};
use crate::net::{self, NetError, RateLimiter, RetryPolicy};
use serde::{Deserialize, Serialize};
use std::time::Duration;

/// Connection settings for a chat-completions endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HttpChatConfig {
    pub url: String,
    pub auth_header: String,
    pub api_key_env: Option<String>,
    pub timeout_secs: u64,
    /// Requests per second; 0 disables throttling.
    pub rate_limit: f64,
    pub retry: RetryPolicy,
}

impl Default for HttpChatConfig {
    fn default() -> Self {
        Self {
            url: String::new(),
            auth_header: "Authorization".into(),
            api_key_env: None,
            timeout_secs: 120,
            rate_limit: 1.0,
            retry: RetryPolicy::default(),
        }
    }
}

/// Generic chat-completions client: `messages` in, `choices[0].message.content` out.
pub struct HttpChatBackend {
    config: HttpChatConfig,
    limiter: RateLimiter,
    api_key: Option<String>,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: &'a [super::chat::ChatMessage],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl HttpChatBackend {
    /// The limiter is shared by every clone of it, so pass the same one to
    /// all clients that talk to one backend.
    pub fn new(config: HttpChatConfig, limiter: RateLimiter) -> Self {
        let api_key = config.api_key_env.as_ref().and_then(|v| std::env::var(v).ok());
        Self { config, limiter, api_key }
    }

    fn attempt(&self, request: &ChatRequest) -> Result<serde_json::Value, NetError> {
        let agent = net::agent(Duration::from_secs(self.config.timeout_secs))?;
        self.limiter.acquire();
        let mut req = agent.post(&self.config.url);
        if let Some(k) = &self.api_key {
            let value = if self.config.auth_header.eq_ignore_ascii_case("authorization") {
                format!("Bearer {k}")
            } else {
                k.clone()
            };
            req = req.set(&self.config.auth_header, &value);
        }
        let body = WireRequest {
            model: &request.model_name,
            messages: &request.messages,
            temperature: request.temperature,
            max_tokens: request.max_tokens,
        };
        net::read_json(&self.config.url, req.send_json(&body))
    }
}

impl ChatBackend for HttpChatBackend {
    fn name(&self) -> String {
        format!("http:{}", self.config.url)
    }

    fn complete(&self, _ctx: &RequestContext, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        request.validate()?;
        let clock = self.limiter.clock().clone();
        let start = clock.now();
        let attempts = self.config.retry.max_attempts.max(1);
        let value =
            self.config.retry.run(clock.as_ref(), NetError::is_transient, |_| self.attempt(request)).map_err(|e| {
                match e.status() {
                    Some(status @ (401 | 403)) => LlmError::Auth { url: self.config.url.clone(), status },
                    _ if e.is_transient() => LlmError::Exhausted { attempts, last: e },
                    _ => LlmError::Net(e),
                }
            })?;
        let wire: WireResponse = serde_json::from_value(value).map_err(|e| LlmError::Schema(e.to_string()))?;
        let text = wire
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| LlmError::Schema("no choices[0].message.content".into()))?;
        Ok(ChatResponse {
            text,
            usage: wire.usage.map(|u| Usage { prompt_tokens: u.prompt_tokens, completion_tokens: u.completion_tokens }),
            latency_ms: (clock.now().saturating_sub(start)).as_millis() as u64,
        })
    }
}
