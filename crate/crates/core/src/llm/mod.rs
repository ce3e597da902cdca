//! Chat backends (HTTP, scripted mock, oracle mock) and the prompt catalog.

mod chat;
mod http;
mod mock;
mod prompts;

pub use chat::{ChatBackend, ChatMessage, ChatRequest, ChatResponse, LlmError, RequestContext, Role, Stage, Usage};
pub use http::{HttpChatBackend, HttpChatConfig};
pub use mock::{OracleBackend, Script, ScriptRule, ScriptedBackend, ScriptedError};
pub use prompts::{PromptCatalog, PromptError, PromptTemplate, TemplateId, CATALOG_VERSION};

use crate::net::{Clock, RateLimiter};
use crate::task::TaskInstance;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Scripted,
    #[default]
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub model_name: String,
    pub max_tokens: u32,
    /// Baselines, Reviewer and judge.
    pub temperature: f64,
    pub scientist_temperature: f64,
    pub http: HttpChatConfig,
    /// Script file for the scripted mock.
    pub script: Option<PathBuf>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Oracle,
            model_name: "oracle".into(),
            max_tokens: 1024,
            temperature: 0.0,
            scientist_temperature: 0.7,
            http: HttpChatConfig::default(),
            script: None,
        }
    }
}

impl BackendConfig {
    pub fn temperature_for(&self, stage: Stage) -> f64 {
        match stage {
            Stage::Scientist => self.scientist_temperature,
            _ => self.temperature,
        }
    }

    /// Label used in reports; mock backends are marked as such.
    pub fn label(&self) -> String {
        match self.kind {
            BackendKind::Http => self.model_name.clone(),
            BackendKind::Scripted => "mock:scripted".into(),
            BackendKind::Oracle => "mock:oracle".into(),
        }
    }

    /// `instances` feed the oracle; other kinds ignore them.
    pub fn build(&self, instances: &[TaskInstance], clock: Arc<dyn Clock>) -> Result<Arc<dyn ChatBackend>, LlmError> {
        Ok(match self.kind {
            BackendKind::Http => {
                if self.http.url.is_empty() {
                    return Err(LlmError::InvalidRequest("backend.http.url is required for the http backend".into()));
                }
                let limiter = RateLimiter::new(self.http.rate_limit, clock);
                Arc::new(HttpChatBackend::new(self.http.clone(), limiter))
            }
            BackendKind::Scripted => {
                let path = self.script.as_ref().ok_or_else(|| {
                    LlmError::InvalidRequest("backend.script is required for the scripted backend".into())
                })?;
                Arc::new(ScriptedBackend::load(path)?)
            }
            BackendKind::Oracle => Arc::new(OracleBackend::new(instances)),
        })
    }
}
