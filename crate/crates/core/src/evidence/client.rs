use super::query::normalize_query;
use crate::net::{self, NetError, RateLimiter};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResult {
    pub url: String,
    pub title: String,
    pub snippet: String,
}

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("search response: {0}")]
    Schema(String),
    #[error("search fixture {path}: {message}")]
    Fixture { path: String, message: String },
    #[error("no fixture entry for query {0:?}")]
    Missing(String),
}

impl SearchError {
    pub fn is_transient(&self) -> bool {
        matches!(self, SearchError::Net(e) if e.is_transient())
    }
}

/// Web search behind a vendor-neutral contract.
pub trait SearchClient: Send + Sync {
    fn search(&self, query: &str, max_results: usize) -> Result<Vec<SearchResult>, SearchError>;
}

/// Answers from a JSON file mapping query text to results. Lookups use the
/// normalized query, and every call is counted.
pub struct FixtureSearchClient {
    results: BTreeMap<String, Vec<SearchResult>>,
    calls: AtomicUsize,
}

impl FixtureSearchClient {
    pub fn new(results: impl IntoIterator<Item = (String, Vec<SearchResult>)>) -> Self {
        Self {
            results: results.into_iter().map(|(k, v)| (normalize_query(&k), v)).collect(),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn load(path: &Path) -> Result<Self, SearchError> {
        let err = |message: String| SearchError::Fixture { path: path.display().to_string(), message };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let map: BTreeMap<String, Vec<SearchResult>> = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        Ok(Self::new(map))
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl SearchClient for FixtureSearchClient {
    fn search(&self, query: &str, max_results: usize) -> Result<Vec<SearchResult>, SearchError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let key = normalize_query(query);
        let hits = self.results.get(&key).ok_or(SearchError::Missing(key))?;
        Ok(hits.iter().take(max_results).cloned().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchApiConfig {
    pub url: String,
    /// Environment variable with the API key; sent as `auth_header`.
    pub api_key_env: Option<String>,
    pub auth_header: String,
    pub timeout_secs: u64,
}

impl Default for SearchApiConfig {
    fn default() -> Self {
        Self { url: String::new(), api_key_env: None, auth_header: "X-Api-Key".into(), timeout_secs: 30 }
    }
}

/// POSTs `{query, max_results}` and expects either a bare result list or
/// `{"results": [...]}`.
pub struct HttpSearchClient {
    config: SearchApiConfig,
    limiter: RateLimiter,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SearchResponse {
    Bare(Vec<SearchResult>),
    Wrapped { results: Vec<SearchResult> },
}

impl HttpSearchClient {
    pub fn new(config: SearchApiConfig, limiter: RateLimiter) -> Self {
        Self { config, limiter }
    }
}

impl SearchClient for HttpSearchClient {
    fn search(&self, query: &str, max_results: usize) -> Result<Vec<SearchResult>, SearchError> {
        let agent = net::agent(Duration::from_secs(self.config.timeout_secs))?;
        self.limiter.acquire();
        let mut req = agent.post(&self.config.url);
        if let Some(key) = self.config.api_key_env.as_ref().and_then(|v| std::env::var(v).ok()) {
            req = req.set(&self.config.auth_header, &key);
        }
        let body = serde_json::json!({ "query": query, "max_results": max_results });
        let value = net::read_json(&self.config.url, req.send_json(body))?;
        let results = match serde_json::from_value(value).map_err(|e| SearchError::Schema(e.to_string()))? {
            SearchResponse::Bare(r) | SearchResponse::Wrapped { results: r } => r,
        };
        Ok(results.into_iter().take(max_results).collect())
    }
}
