//! Cosine retrieval over embeddings from an external service.
//!
//! The service contract is a single POST taking `{"texts": [...]}` and
//! returning `{"vectors": [[...], ...]}`. Corpus embeddings are cached in a
//! JSON-lines file keyed by corpus hash and service identity, so a warm
//! cache costs no corpus calls. Failures are reported, never papered over
//! with lexical results.

use super::bm25::ScoredPassage;
use super::corpus::Passage;
use crate::dataset::FoodId;
use crate::fsutil;
use crate::net::{self, Clock, NetError, RetryPolicy};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

#[derive(Debug, thiserror::Error)]
pub enum DenseError {
    #[error("embedding service: {0}")]
    Service(#[from] NetError),
    #[error("embedding service returned {got} vectors for {want} texts")]
    Count { want: usize, got: usize },
    #[error("embedding dimension {got} does not match {want}")]
    Dimension { want: usize, got: usize },
    #[error("embedding service response: {0}")]
    Schema(String),
    #[error("embedding cache {path}: {message}")]
    Cache { path: String, message: String },
}

pub trait EmbeddingService: Send + Sync {
    /// Stable identity of the model behind the service; part of the cache key.
    fn identity(&self) -> String;
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, DenseError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingConfig {
    pub url: String,
    /// Header carrying the key; `Authorization` values get a `Bearer ` prefix.
    pub auth_header: String,
    /// Environment variable holding the key, if the service needs one.
    pub api_key_env: Option<String>,
    pub model_name: String,
    pub batch_size: usize,
    pub timeout_secs: u64,
    pub retry: RetryPolicy,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            url: String::new(),
            auth_header: "Authorization".into(),
            api_key_env: None,
            model_name: String::new(),
            batch_size: 64,
            timeout_secs: 60,
            retry: RetryPolicy::default(),
        }
    }
}

pub struct HttpEmbeddingService {
    config: EmbeddingConfig,
    clock: Arc<dyn Clock>,
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
    #[serde(skip_serializing_if = "str::is_empty")]
    model: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

impl HttpEmbeddingService {
    pub fn new(config: EmbeddingConfig, clock: Arc<dyn Clock>) -> Self {
        Self { config, clock }
    }

    fn post(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, DenseError> {
        let cfg = &self.config;
        let key = cfg.api_key_env.as_ref().and_then(|v| std::env::var(v).ok());
        let body = EmbedRequest { texts, model: &cfg.model_name };
        let value = cfg.retry.run(self.clock.as_ref(), NetError::is_transient, |_| {
            let agent = net::agent(Duration::from_secs(cfg.timeout_secs))?;
            let mut req = agent.post(&cfg.url);
            if let Some(k) = &key {
                let v = if cfg.auth_header.eq_ignore_ascii_case("authorization") {
                    format!("Bearer {k}")
                } else {
                    k.clone()
                };
                req = req.set(&cfg.auth_header, &v);
            }
            net::read_json(&cfg.url, req.send_json(&body))
        })?;
        let resp: EmbedResponse = serde_json::from_value(value).map_err(|e| DenseError::Schema(e.to_string()))?;
        if resp.vectors.len() != texts.len() {
            return Err(DenseError::Count { want: texts.len(), got: resp.vectors.len() });
        }
        Ok(resp.vectors)
    }
}

impl EmbeddingService for HttpEmbeddingService {
    fn identity(&self) -> String {
        format!("{}#{}", self.config.url, self.config.model_name)
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, DenseError> {
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.config.batch_size.max(1)) {
            out.extend(self.post(chunk)?);
        }
        Ok(out)
    }
}

/// Unit-normalized corpus embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseIndex {
    passages: Vec<Passage>,
    vectors: Vec<Vec<f64>>,
    service: String,
    corpus_hash: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CacheHeader {
    format: String,
    version: u32,
    service: String,
    corpus_hash: String,
    dimension: usize,
    documents: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CacheRow {
    food_id: FoodId,
    vector: Vec<f64>,
}

const CACHE_FORMAT: &str = "flavorbench-embeddings";

fn corpus_hash(passages: &[Passage]) -> String {
    let mut h = Sha256::new();
    for p in passages {
        h.update(p.food_id.to_string().as_bytes());
        h.update([0]);
        h.update(p.text.as_bytes());
        h.update([b'\n']);
    }
    crate::dataset::hex_digest(&h.finalize())
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

impl DenseIndex {
    /// Embed `corpus`, or reuse `cache` when it matches the corpus and service.
    pub fn build(service: &dyn EmbeddingService, corpus: &[Passage], cache: Option<&Path>) -> Result<Self, DenseError> {
        let mut passages = corpus.to_vec();
        passages.sort();
        let hash = corpus_hash(&passages);
        let identity = service.identity();
        if let Some(path) = cache.filter(|p| p.exists()) {
            match Self::load_cache(path, &passages) {
                Ok(idx) if idx.corpus_hash == hash && idx.service == identity => return Ok(idx),
                Ok(_) => log::warn!("embedding cache {} is stale; re-embedding", path.display()),
                Err(e) => log::warn!("ignoring unreadable embedding cache: {e}"),
            }
        }
        let texts: Vec<String> = passages.iter().map(|p| p.text.clone()).collect();
        let raw = if texts.is_empty() { Vec::new() } else { service.embed(&texts)? };
        if raw.len() != texts.len() {
            return Err(DenseError::Count { want: texts.len(), got: raw.len() });
        }
        let dim = raw.first().map_or(0, Vec::len);
        if let Some(bad) = raw.iter().find(|v| v.len() != dim) {
            return Err(DenseError::Dimension { want: dim, got: bad.len() });
        }
        let idx =
            Self { passages, vectors: raw.into_iter().map(normalize).collect(), service: identity, corpus_hash: hash };
        if let Some(path) = cache {
            idx.save_cache(path)?;
        }
        Ok(idx)
    }

    fn save_cache(&self, path: &Path) -> Result<(), DenseError> {
        let header = CacheHeader {
            format: CACHE_FORMAT.into(),
            version: 1,
            service: self.service.clone(),
            corpus_hash: self.corpus_hash.clone(),
            dimension: self.vectors.first().map_or(0, Vec::len),
            documents: self.passages.len(),
        };
        let mut bytes = fsutil::to_jsonl([&header]).expect("header serializes");
        let rows =
            self.passages.iter().zip(&self.vectors).map(|(p, v)| CacheRow { food_id: p.food_id, vector: v.clone() });
        bytes.extend(fsutil::to_jsonl(rows).expect("rows serialize"));
        fsutil::write_atomic(path, &bytes)
            .map_err(|e| DenseError::Cache { path: path.display().to_string(), message: e.to_string() })
    }

    fn load_cache(path: &Path, passages: &[Passage]) -> Result<Self, DenseError> {
        let err = |message: String| DenseError::Cache { path: path.display().to_string(), message };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: CacheHeader = serde_json::from_str(lines.next().ok_or_else(|| err("empty cache".into()))?)
            .map_err(|e| err(e.to_string()))?;
        if header.format != CACHE_FORMAT {
            return Err(err(format!("unexpected format {}", header.format)));
        }
        let rows: Vec<CacheRow> =
            lines.map(serde_json::from_str).collect::<Result<_, _>>().map_err(|e| err(e.to_string()))?;
        if rows.len() != passages.len() || rows.iter().zip(passages).any(|(r, p)| r.food_id != p.food_id) {
            return Err(err("cached passages differ from the corpus".into()));
        }
        Ok(Self {
            passages: passages.to_vec(),
            vectors: rows.into_iter().map(|r| r.vector).collect(),
            service: header.service,
            corpus_hash: header.corpus_hash,
        })
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    /// Top `k` passages by cosine similarity to an already-embedded query,
    /// ties by ascending food id.
    pub fn rank(&self, query_vector: &[f64], k: usize) -> Result<Vec<ScoredPassage>, DenseError> {
        let q = normalize(query_vector.to_vec());
        let dim = self.vectors.first().map_or(q.len(), Vec::len);
        if q.len() != dim {
            return Err(DenseError::Dimension { want: dim, got: q.len() });
        }
        let mut scored: Vec<(usize, f64)> =
            self.vectors.iter().enumerate().map(|(i, v)| (i, v.iter().zip(&q).map(|(a, b)| a * b).sum())).collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(self.passages[a.0].food_id.cmp(&self.passages[b.0].food_id)));
        Ok(scored
            .into_iter()
            .take(k)
            .map(|(i, score)| ScoredPassage {
                food_id: self.passages[i].food_id,
                text: self.passages[i].text.clone(),
                score,
            })
            .collect())
    }

    pub fn retrieve(
        &self,
        service: &dyn EmbeddingService,
        query: &str,
        k: usize,
    ) -> Result<Vec<ScoredPassage>, DenseError> {
        let mut v = service.embed(&[query.to_string()])?;
        let q = v.pop().ok_or(DenseError::Count { want: 1, got: 0 })?;
        self.rank(&q, k)
    }
}

/// Dense retrieval paired with the service that embeds queries.
pub struct DenseRetriever {
    pub index: DenseIndex,
    pub service: Arc<dyn EmbeddingService>,
}

/// Build (or load from `cache`) and query in one step.
pub fn embed_retrieve(
    service: &dyn EmbeddingService,
    corpus: &[Passage],
    query: &str,
    k: usize,
    cache: Option<&Path>,
) -> Result<Vec<ScoredPassage>, DenseError> {
    DenseIndex::build(service, corpus, cache)?.retrieve(service, query, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    /// One-hot by passage id parsed from "doc N".
    struct OneHot {
        calls: AtomicUsize,
    }

    impl EmbeddingService for OneHot {
        fn identity(&self) -> String {
            "one-hot".into()
        }

        fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, DenseError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(texts
                .iter()
                .map(|t| {
                    let i: usize = t.trim_start_matches("doc ").parse().unwrap();
                    let mut v = vec![0.0; 8];
                    v[i] = 2.0;
                    v
                })
                .collect())
        }
    }

    struct Down;

    impl EmbeddingService for Down {
        fn identity(&self) -> String {
            "down".into()
        }

        fn embed(&self, _: &[String]) -> Result<Vec<Vec<f64>>, DenseError> {
            Err(DenseError::Service(NetError::Transport { url: "mock".into(), message: "refused".into() }))
        }
    }

    fn corpus() -> Vec<Passage> {
        (1..=5).map(|i| Passage { food_id: i as u64 * 10, text: format!("doc {i}") }).collect()
    }

    #[test]
    fn one_hot_query_hits_its_passage() {
        let svc = OneHot { calls: AtomicUsize::new(0) };
        let hits = embed_retrieve(&svc, &corpus(), "doc 3", 2, None).unwrap();
        assert_eq!(hits[0].food_id, 30);
        assert!((hits[0].score - 1.0).abs() < 1e-12);
        assert_eq!(hits[1].food_id, 10);
    }

    #[test]
    fn warm_cache_skips_corpus_calls() {
        let dir = tempfile::tempdir().unwrap();
        let cache = dir.path().join("emb.jsonl");
        let svc = OneHot { calls: AtomicUsize::new(0) };
        DenseIndex::build(&svc, &corpus(), Some(&cache)).unwrap();
        assert_eq!(svc.calls.load(Ordering::SeqCst), 1);
        let idx = DenseIndex::build(&svc, &corpus(), Some(&cache)).unwrap();
        assert_eq!(svc.calls.load(Ordering::SeqCst), 1);
        assert_eq!(idx.len(), 5);
        // Another service identity re-embeds instead of trusting the cache.
        assert!(DenseIndex::build(&Down, &corpus(), Some(&cache)).is_err());
    }

    #[test]
    fn service_down_without_cache_is_an_error() {
        assert!(matches!(embed_retrieve(&Down, &corpus(), "doc 1", 1, None), Err(DenseError::Service(_))));
    }
}
