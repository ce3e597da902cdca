//! Resumable crawler for a JSON food-page endpoint.
//!
//! Endpoint shape:
//!
//! - `GET {base}/foods.json` → `{"food_ids": [1, 2, ...]}`
//! - `GET {base}/foods/{id}.json` → `{"food_id", "name", "category", "molecules": [molecule records]}`
//!
//! Each fetched page is kept under `pages/`; a rerun only requests ids
//! without a page. After every run the export files are rebuilt from the
//! pages on disk and `fetch_manifest.json` records progress.

use super::*;
use crate::net::{self, Clock, NetError, RateLimiter, RetryPolicy};
use std::sync::Arc;
use std::time::Duration;

pub const FETCH_MANIFEST_FILE: &str = "fetch_manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct FetchConfig {
    pub base_url: String,
    /// Requests per second; 0 disables throttling.
    pub rate_limit: f64,
    pub timeout_secs: u64,
    pub retry: RetryPolicy,
}

impl Default for FetchConfig {
    fn default() -> Self {
        Self { base_url: String::new(), rate_limit: 2.0, timeout_secs: 30, retry: RetryPolicy::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoodPage {
    pub food_id: FoodId,
    pub name: String,
    pub category: String,
    pub molecules: Vec<MoleculeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPage {
    pub food_id: FoodId,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FetchManifest {
    pub base_url: String,
    pub completed: Vec<FoodId>,
    pub skipped: Vec<SkippedPage>,
    pub pending: Vec<FoodId>,
    /// Ids requested over the network during this run.
    pub requested: Vec<FoodId>,
    pub aborted: Option<String>,
}

pub fn fetch(config: &FetchConfig, out: &Path, clock: Arc<dyn Clock>) -> Result<FetchManifest, DatasetError> {
    let io = |source| DatasetError::Io { path: out.to_path_buf(), source };
    let pages_dir = out.join("pages");
    std::fs::create_dir_all(&pages_dir).map_err(io)?;
    let limiter = RateLimiter::new(config.rate_limit, clock.clone());
    let base = config.base_url.trim_end_matches('/');
    let timeout = Duration::from_secs(config.timeout_secs);

    let get = |url: &str| -> Result<serde_json::Value, NetError> {
        config.retry.run(clock.as_ref(), NetError::is_transient, |_| {
            let agent = net::agent(timeout)?;
            limiter.acquire();
            net::read_json(url, agent.get(url).call())
        })
    };

    let mut manifest = FetchManifest { base_url: config.base_url.clone(), ..Default::default() };

    let index = match get(&format!("{base}/foods.json")) {
        Ok(v) => v,
        Err(e) => {
            manifest.completed = existing_pages(&pages_dir);
            return abort(out, manifest, e.to_string());
        }
    };
    let mut ids: Vec<FoodId> = match index.get("food_ids").cloned().map(serde_json::from_value) {
        Some(Ok(ids)) => ids,
        _ => {
            manifest.completed = existing_pages(&pages_dir);
            return abort(out, manifest, "index response lacks a food_ids array".into());
        }
    };
    ids.sort_unstable();
    ids.dedup();

    for (pos, &id) in ids.iter().enumerate() {
        let page_path = pages_dir.join(format!("{id}.json"));
        if page_path.is_file() {
            manifest.completed.push(id);
            continue;
        }
        manifest.requested.push(id);
        match get(&format!("{base}/foods/{id}.json")) {
            Ok(value) => match serde_json::from_value::<FoodPage>(value) {
                Ok(page) if page.food_id == id => {
                    let bytes = fsutil::to_pretty_json(&page).expect("page serializes");
                    fsutil::write_atomic(&page_path, &bytes).map_err(io)?;
                    manifest.completed.push(id);
                }
                Ok(page) => skip(&mut manifest, id, format!("page reports food_id {}", page.food_id)),
                Err(e) => skip(&mut manifest, id, e.to_string()),
            },
            Err(e @ NetError::Decode { .. }) => skip(&mut manifest, id, e.to_string()),
            Err(e) => {
                manifest.pending = ids[pos..].to_vec();
                return abort(out, manifest, e.to_string());
            }
        }
    }

    assemble_export(out, &pages_dir, &manifest.completed)?;
    write_manifest(out, &manifest)?;
    Ok(manifest)
}

fn skip(manifest: &mut FetchManifest, food_id: FoodId, reason: String) {
    log::warn!("skipping food {food_id}: {reason}");
    manifest.skipped.push(SkippedPage { food_id, reason });
}

fn abort(out: &Path, mut manifest: FetchManifest, reason: String) -> Result<FetchManifest, DatasetError> {
    log::error!("fetch aborted: {reason}");
    manifest.aborted = Some(reason.clone());
    write_manifest(out, &manifest)?;
    Err(DatasetError::FetchAborted(reason))
}

fn write_manifest(out: &Path, manifest: &FetchManifest) -> Result<(), DatasetError> {
    let bytes = fsutil::to_pretty_json(manifest).expect("manifest serializes");
    fsutil::write_atomic(&out.join(FETCH_MANIFEST_FILE), &bytes)
        .map_err(|source| DatasetError::Io { path: out.to_path_buf(), source })
}

fn existing_pages(dir: &Path) -> Vec<FoodId> {
    let mut ids: Vec<FoodId> = std::fs::read_dir(dir)
        .into_iter()
        .flatten()
        .flatten()
        .filter_map(|e| e.file_name().to_str()?.strip_suffix(".json")?.parse().ok())
        .collect();
    ids.sort_unstable();
    ids
}

/// Rebuild the three export files from stored pages.
fn assemble_export(out: &Path, pages_dir: &Path, ids: &[FoodId]) -> Result<(), DatasetError> {
    let io = |source| DatasetError::Io { path: out.to_path_buf(), source };
    let mut molecules: BTreeMap<MoleculeId, MoleculeRecord> = BTreeMap::new();
    let mut foods = Vec::new();
    let mut assoc = Vec::new();
    for &id in ids {
        let path = pages_dir.join(format!("{id}.json"));
        let bytes = std::fs::read(&path).map_err(io)?;
        let page: FoodPage = serde_json::from_slice(&bytes).map_err(|e| DatasetError::Malformed {
            file: path.display().to_string(),
            line: 1,
            message: e.to_string(),
        })?;
        let mut mol_ids: Vec<MoleculeId> = page.molecules.iter().map(|m| m.molecule_id).collect();
        mol_ids.sort_unstable();
        mol_ids.dedup();
        for m in page.molecules {
            molecules.entry(m.molecule_id).or_insert(m);
        }
        for &m in &mol_ids {
            assoc.push(Association { food_id: page.food_id, molecule_id: m });
        }
        foods.push(serde_json::json!({
            "food_id": page.food_id,
            "name": page.name,
            "category": page.category,
            "molecule_ids": mol_ids,
        }));
    }
    let files = [
        (MOLECULES_FILE, fsutil::to_jsonl(molecules.values())),
        (FOODS_FILE, fsutil::to_jsonl(&foods)),
        (ASSOCIATIONS_FILE, fsutil::to_jsonl(&assoc)),
    ];
    for (name, bytes) in files {
        let bytes = bytes.expect("export rows serialize");
        fsutil::write_atomic(&out.join(name), &bytes).map_err(io)?;
    }
    Ok(())
}
