use super::query::normalize_query;
use crate::fsutil;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const EVIDENCE_FILE: &str = "evidence.jsonl";
pub const EVIDENCE_MANIFEST: &str = "evidence_manifest.json";
pub const MAX_SNIPPET_CHARS: usize = 2000;

pub const DEFAULT_ALLOWED_HOSTS: [&str; 2] = ["pubmed.ncbi.nlm.nih.gov", "arxiv.org"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceRecord {
    pub query_key: String,
    pub url: String,
    pub host: String,
    pub title: String,
    pub snippet: String,
    pub fetched_at: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceManifest {
    pub format_version: u32,
    pub allowed_hosts: Vec<String>,
    pub collected_at: Option<String>,
    pub record_count: usize,
    /// Keys whose search finished, including those with no usable results.
    pub completed: Vec<String>,
    /// Keys whose search failed, with the last error.
    pub failed: BTreeMap<String, String>,
}

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("evidence cache {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("evidence cache {path}: {message}")]
    Format { path: String, message: String },
}

/// Host-filtered search snippets keyed by normalized query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvidenceCache {
    records: BTreeMap<String, Vec<EvidenceRecord>>,
    manifest: EvidenceManifest,
}

/// Whether `host` is an allowed host or a subdomain of one.
pub fn host_allowed(host: &str, allowed: &[String]) -> bool {
    let host = host.trim_end_matches('.').to_ascii_lowercase();
    allowed.iter().any(|a| {
        let a = a.to_ascii_lowercase();
        host == a || host.ends_with(&format!(".{a}"))
    })
}

/// Cut `s` to at most `max` characters.
pub fn truncate_chars(s: &str, max: usize) -> String {
    match s.char_indices().nth(max) {
        Some((i, _)) => s[..i].to_string(),
        None => s.to_string(),
    }
}

impl EvidenceCache {
    pub fn new(allowed_hosts: Vec<String>) -> Self {
        Self {
            records: BTreeMap::new(),
            manifest: EvidenceManifest {
                format_version: 1,
                allowed_hosts,
                collected_at: None,
                record_count: 0,
                completed: Vec::new(),
                failed: BTreeMap::new(),
            },
        }
    }

    pub fn manifest(&self) -> &EvidenceManifest {
        &self.manifest
    }

    pub fn allowed_hosts(&self) -> &[String] {
        &self.manifest.allowed_hosts
    }

    pub fn is_completed(&self, key: &str) -> bool {
        self.manifest.completed.binary_search_by(|k| k.as_str().cmp(key)).is_ok()
    }

    pub fn len(&self) -> usize {
        self.records.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.records.keys().map(String::as_str)
    }

    pub fn records(&self) -> impl Iterator<Item = &EvidenceRecord> {
        self.records.values().flatten()
    }

    /// Up to `cap` stored records for `query`, in stored order. Never touches
    /// the network.
    pub fn lookup(&self, query: &str, cap: usize) -> &[EvidenceRecord] {
        match self.records.get(&normalize_query(query)) {
            Some(v) => &v[..v.len().min(cap)],
            None => &[],
        }
    }

    /// Record a finished search; off-host records are dropped.
    pub fn complete(&mut self, key: &str, records: Vec<EvidenceRecord>) {
        let kept: Vec<EvidenceRecord> =
            records.into_iter().filter(|r| host_allowed(&r.host, &self.manifest.allowed_hosts)).collect();
        if !kept.is_empty() {
            self.records.insert(key.to_string(), kept);
        }
        self.manifest.failed.remove(key);
        if let Err(pos) = self.manifest.completed.binary_search_by(|k| k.as_str().cmp(key)) {
            self.manifest.completed.insert(pos, key.to_string());
        }
        self.manifest.record_count = self.len();
    }

    pub fn fail(&mut self, key: &str, message: String) {
        self.manifest.failed.insert(key.to_string(), message);
    }

    pub fn set_collected_at(&mut self, when: String) {
        self.manifest.collected_at = Some(when);
    }

    pub fn save(&self, dir: &Path) -> Result<(), CacheError> {
        let io = |path: &Path, source| CacheError::Io { path: path.display().to_string(), source };
        let data = fsutil::to_jsonl(self.records()).expect("records serialize");
        let file = dir.join(EVIDENCE_FILE);
        fsutil::write_atomic(&file, &data).map_err(|e| io(&file, e))?;
        let manifest = fsutil::to_pretty_json(&self.manifest).expect("manifest serializes");
        let file = dir.join(EVIDENCE_MANIFEST);
        fsutil::write_atomic(&file, &manifest).map_err(|e| io(&file, e))
    }

    pub fn load(dir: &Path) -> Result<Self, CacheError> {
        let mpath = dir.join(EVIDENCE_MANIFEST);
        let format = |path: &Path, message: String| CacheError::Format { path: path.display().to_string(), message };
        let text = std::fs::read_to_string(&mpath)
            .map_err(|source| CacheError::Io { path: mpath.display().to_string(), source })?;
        let mut manifest: EvidenceManifest = serde_json::from_str(&text).map_err(|e| format(&mpath, e.to_string()))?;
        manifest.completed.sort();
        manifest.completed.dedup();
        let rpath = dir.join(EVIDENCE_FILE);
        let rows: Vec<(usize, EvidenceRecord)> =
            fsutil::read_jsonl(&rpath).map_err(|e| format(&rpath, e.to_string()))?;
        let mut records: BTreeMap<String, Vec<EvidenceRecord>> = BTreeMap::new();
        for (line, r) in rows {
            if !host_allowed(&r.host, &manifest.allowed_hosts) {
                return Err(format(&rpath, format!("line {line}: host {} is not allowed", r.host)));
            }
            if r.query_key != normalize_query(&r.query_key) {
                return Err(format(&rpath, format!("line {line}: query key is not normalized")));
            }
            records.entry(r.query_key.clone()).or_default().push(r);
        }
        if manifest.record_count != records.values().map(Vec::len).sum::<usize>() {
            return Err(format(&mpath, "record_count does not match the record file".into()));
        }
        Ok(Self { records, manifest })
    }

    /// Load `dir` if it holds a cache, else start an empty one.
    pub fn load_or_new(dir: &Path, allowed_hosts: Vec<String>) -> Result<Self, CacheError> {
        if dir.join(EVIDENCE_MANIFEST).exists() {
            let mut c = Self::load(dir)?;
            if c.manifest.allowed_hosts != allowed_hosts {
                log::warn!("allowed hosts changed; keeping records that satisfy the new list");
                c.manifest.allowed_hosts = allowed_hosts;
                let hosts = c.manifest.allowed_hosts.clone();
                for v in c.records.values_mut() {
                    v.retain(|r| host_allowed(&r.host, &hosts));
                }
                c.records.retain(|_, v| !v.is_empty());
                c.manifest.record_count = c.len();
            }
            Ok(c)
        } else {
            Ok(Self::new(allowed_hosts))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(key: &str, host: &str, n: usize) -> EvidenceRecord {
        EvidenceRecord {
            query_key: key.into(),
            url: format!("https://{host}/{n}"),
            host: host.into(),
            title: format!("t{n}"),
            snippet: "s".into(),
            fetched_at: "2026-01-01T00:00:00Z".into(),
        }
    }

    fn hosts() -> Vec<String> {
        DEFAULT_ALLOWED_HOSTS.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn host_matching() {
        let h = hosts();
        assert!(host_allowed("pubmed.ncbi.nlm.nih.gov", &h));
        assert!(host_allowed("export.arxiv.org", &h));
        assert!(host_allowed("ArXiv.org", &h));
        assert!(!host_allowed("notarxiv.org", &h));
        assert!(!host_allowed("blog.example.com", &h));
    }

    #[test]
    fn lookup_normalizes_and_caps() {
        let mut c = EvidenceCache::new(hosts());
        let key = "what molecules are present in coffee?";
        c.complete(key, (0..5).map(|i| rec(key, "arxiv.org", i)).collect());
        assert_eq!(c.lookup("What Molecules are present in  Coffee?", 10).len(), 5);
        let top = c.lookup("what molecules are present in coffee?", 3);
        assert_eq!(top.iter().map(|r| r.title.as_str()).collect::<Vec<_>>(), ["t0", "t1", "t2"]);
        assert!(c.lookup("unknown", 3).is_empty());
    }

    #[test]
    fn save_load_save_is_byte_stable() {
        let mut c = EvidenceCache::new(hosts());
        c.complete("b", vec![rec("b", "arxiv.org", 1), rec("b", "evil.com", 2)]);
        c.complete("a", vec![rec("a", "pubmed.ncbi.nlm.nih.gov", 3)]);
        c.complete("empty", vec![]);
        c.fail("x", "boom".into());
        c.set_collected_at("2026-01-02T00:00:00Z".into());
        let d1 = tempfile::tempdir().unwrap();
        c.save(d1.path()).unwrap();
        let back = EvidenceCache::load(d1.path()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.len(), 2);
        assert!(back.is_completed("empty"));
        let d2 = tempfile::tempdir().unwrap();
        back.save(d2.path()).unwrap();
        for f in [EVIDENCE_FILE, EVIDENCE_MANIFEST] {
            assert_eq!(std::fs::read(d1.path().join(f)).unwrap(), std::fs::read(d2.path().join(f)).unwrap());
        }
    }

    #[test]
    fn truncation_respects_chars() {
        assert_eq!(truncate_chars("héllo", 2), "hé");
        assert_eq!(truncate_chars("abc", 10), "abc");
    }
}
