//! Web evidence gathered ahead of inference and served from a local cache.
//!
//! [`collect`] runs templated queries through a [`SearchClient`], keeps only
//! results from allowed scholarly hosts, and writes `evidence.jsonl` plus
//! `evidence_manifest.json`. At inference time [`EvidenceCache::lookup`]
//! reads that cache and nothing else.

mod cache;
mod client;
mod collect;
mod query;

pub use cache::{
    host_allowed, truncate_chars, CacheError, EvidenceCache, EvidenceManifest, EvidenceRecord, DEFAULT_ALLOWED_HOSTS,
    EVIDENCE_FILE, EVIDENCE_MANIFEST, MAX_SNIPPET_CHARS,
};
pub use client::{FixtureSearchClient, HttpSearchClient, SearchApiConfig, SearchClient, SearchError, SearchResult};
pub use collect::{collect, EvidenceConfig};
pub use query::{make_queries, normalize_query, EvidenceQuery, QueryKind};
