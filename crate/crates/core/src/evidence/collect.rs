use super::cache::{
    truncate_chars, CacheError, EvidenceCache, EvidenceRecord, DEFAULT_ALLOWED_HOSTS, MAX_SNIPPET_CHARS,
};
use super::client::{SearchClient, SearchError, SearchResult};
use super::query::EvidenceQuery;
use crate::net::{Clock, RetryPolicy};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvidenceConfig {
    pub allowed_hosts: Vec<String>,
    /// Results kept per query.
    pub results_per_query: usize,
    /// Records per query placed in prompts.
    pub prompt_results: usize,
    pub parallelism: usize,
    /// Requests per second for the search API.
    pub rate_limit: f64,
    pub retry: RetryPolicy,
}

impl Default for EvidenceConfig {
    fn default() -> Self {
        Self {
            allowed_hosts: DEFAULT_ALLOWED_HOSTS.iter().map(|s| s.to_string()).collect(),
            results_per_query: 5,
            prompt_results: 3,
            parallelism: 4,
            rate_limit: 1.0,
            retry: RetryPolicy::default(),
        }
    }
}

/// Search every uncached query, keep on-host results, and commit to `dir`
/// after each batch. Failed keys are recorded and retried on the next run.
pub fn collect(
    queries: &[EvidenceQuery],
    client: &dyn SearchClient,
    dir: &Path,
    config: &EvidenceConfig,
    clock: &dyn Clock,
) -> Result<EvidenceCache, CacheError> {
    let mut cache = EvidenceCache::load_or_new(dir, config.allowed_hosts.clone())?;
    let mut seen = BTreeSet::new();
    let pending: Vec<&EvidenceQuery> =
        queries.iter().filter(|q| seen.insert(q.key())).filter(|q| !cache.is_completed(&q.key())).collect();
    if pending.is_empty() {
        log::info!("evidence cache already covers all {} queries", seen.len());
        return Ok(cache);
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.parallelism.max(1)).build().expect("thread pool");
    let batch = config.parallelism.max(1) * 4;
    for chunk in pending.chunks(batch) {
        let outcomes: Vec<Result<Vec<SearchResult>, SearchError>> = pool.install(|| {
            chunk
                .par_iter()
                .map(|q| {
                    config
                        .retry
                        .run(clock, SearchError::is_transient, |_| client.search(&q.text, config.results_per_query))
                })
                .collect()
        });
        let now = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
        for (q, outcome) in chunk.iter().zip(outcomes) {
            let key = q.key();
            match outcome {
                Ok(results) => {
                    let records = results
                        .into_iter()
                        .take(config.results_per_query)
                        .filter_map(|r| to_record(&key, r, &now))
                        .collect();
                    cache.complete(&key, records);
                }
                Err(e) => {
                    log::warn!("search failed for {key:?}: {e}");
                    cache.fail(&key, e.to_string());
                }
            }
        }
        cache.set_collected_at(now);
        cache.save(dir)?;
    }
    Ok(cache)
}

fn to_record(key: &str, r: SearchResult, fetched_at: &str) -> Option<EvidenceRecord> {
    let host = match url::Url::parse(&r.url) {
        Ok(u) => u.host_str()?.to_ascii_lowercase(),
        Err(_) => {
            log::debug!("dropping result with unparseable url {:?}", r.url);
            return None;
        }
    };
    Some(EvidenceRecord {
        query_key: key.to_string(),
        url: r.url,
        host,
        title: r.title,
        snippet: truncate_chars(&r.snippet, MAX_SNIPPET_CHARS),
        fetched_at: fetched_at.to_string(),
    })
}
