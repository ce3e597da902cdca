use flavorbench_core::dataset::fetch::{fetch, FetchConfig, FETCH_MANIFEST_FILE};
use flavorbench_core::dataset::{ingest, DatasetError};
use flavorbench_core::net::{ManualClock, RetryPolicy};
use serde_json::json;
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

/// Path-routed JSON server. Paths in `down` answer 503.
struct Site {
    base: String,
    down: Arc<Mutex<Vec<String>>>,
    hits: Arc<Mutex<Vec<String>>>,
    stop: Arc<AtomicBool>,
}

impl Site {
    fn start(routes: BTreeMap<String, String>) -> Site {
        let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
        let base = format!("http://{}", server.server_addr().to_ip().unwrap());
        let down = Arc::new(Mutex::new(Vec::<String>::new()));
        let hits = Arc::new(Mutex::new(Vec::new()));
        let stop = Arc::new(AtomicBool::new(false));
        let (d, h, s) = (down.clone(), hits.clone(), stop.clone());
        std::thread::spawn(move || {
            while !s.load(Ordering::SeqCst) {
                let Ok(Some(req)) = server.recv_timeout(Duration::from_millis(20)) else { continue };
                let path = req.url().to_string();
                h.lock().unwrap().push(path.clone());
                let resp = if d.lock().unwrap().contains(&path) {
                    tiny_http::Response::from_string("unavailable").with_status_code(503)
                } else if let Some(body) = routes.get(&path) {
                    tiny_http::Response::from_string(body.clone())
                } else {
                    tiny_http::Response::from_string("missing").with_status_code(404)
                };
                let _ = req.respond(resp);
            }
        });
        Site { base, down, hits, stop }
    }

    fn hits(&self) -> Vec<String> {
        std::mem::take(&mut *self.hits.lock().unwrap())
    }
}

impl Drop for Site {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
    }
}

fn page(id: u64, name: &str, category: &str, molecules: &[(u64, &str, &str)]) -> String {
    let mols: Vec<_> =
        molecules.iter().map(|(mid, n, s)| json!({"molecule_id": mid, "name": n, "smiles": s})).collect();
    json!({"food_id": id, "name": name, "category": category, "molecules": mols}).to_string()
}

fn routes() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("/foods.json".to_string(), json!({"food_ids": [3, 1, 2, 4]}).to_string()),
        ("/foods/1.json".into(), page(1, "Apple", "Fruit", &[(10, "hexanal", "CCCCCC=O"), (11, "ethanol", "CCO")])),
        ("/foods/2.json".into(), page(2, "Beer", "Beverage", &[(11, "ethanol", "CCO")])),
        ("/foods/3.json".into(), page(3, "Basil", "Herb", &[(12, "linalool", "CC(C)=CCCC(C)(O)C=C")])),
        ("/foods/4.json".into(), "{not json".into()),
    ])
}

fn config(base: &str) -> FetchConfig {
    FetchConfig {
        base_url: base.into(),
        rate_limit: 0.0,
        timeout_secs: 5,
        retry: RetryPolicy { max_attempts: 3, initial_backoff_ms: 10, multiplier: 2.0, max_backoff_ms: 100 },
    }
}

#[test]
fn fetch_assembles_an_ingestible_export() {
    let site = Site::start(routes());
    let out = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::new());
    let manifest = fetch(&config(&site.base), out.path(), clock.clone()).unwrap();
    assert_eq!(manifest.completed, [1, 2, 3]);
    assert_eq!(manifest.skipped.len(), 1);
    assert_eq!(manifest.skipped[0].food_id, 4);
    assert!(manifest.aborted.is_none());
    assert!(clock.sleeps().is_empty());

    let stores = ingest(out.path()).unwrap();
    assert_eq!(stores.foods.len(), 3);
    assert_eq!(stores.molecules.len(), 3);
    assert_eq!(stores.associations.len(), 4);

    // A second run finds every page on disk and only asks for the index and the bad page.
    site.hits();
    let again = fetch(&config(&site.base), out.path(), clock).unwrap();
    assert_eq!(again.requested, [4]);
    assert_eq!(site.hits(), ["/foods.json", "/foods/4.json"]);
}

#[test]
fn outage_aborts_and_resumes_where_it_stopped() {
    let site = Site::start(routes());
    site.down.lock().unwrap().push("/foods/2.json".into());
    let out = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::new());
    let err = fetch(&config(&site.base), out.path(), clock.clone()).unwrap_err();
    assert!(matches!(err, DatasetError::FetchAborted(_)), "{err}");
    assert_eq!(clock.sleeps(), [Duration::from_millis(10), Duration::from_millis(20)]);
    let text = std::fs::read_to_string(out.path().join(FETCH_MANIFEST_FILE)).unwrap();
    let manifest: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(manifest["completed"], json!([1]));
    assert_eq!(manifest["pending"], json!([2, 3, 4]));

    site.down.lock().unwrap().clear();
    site.hits();
    let done = fetch(&config(&site.base), out.path(), clock).unwrap();
    assert_eq!(done.completed, [1, 2, 3]);
    assert_eq!(done.requested, [2, 3, 4]);
    assert!(!site.hits().contains(&"/foods/1.json".to_string()));
}
