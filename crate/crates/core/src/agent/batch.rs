use super::pipeline::{run_instance, Resources};
use super::{Answer, Hypothesis, Outcome, Pipeline};
use crate::dataset::{MoleculeId, SplitTag};
use crate::fsutil::{self, JsonlError};
use crate::task::{Task, TaskInstance};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

pub const JOURNAL_FILE: &str = "journal.jsonl";
pub const RESULTS_FILE: &str = "results.jsonl";
pub const TRACE_DIR: &str = "traces";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Answered,
    Abstained,
    Failed,
}

/// One line of the results file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceResult {
    pub id: String,
    pub task: Task,
    pub split: SplitTag,
    pub pipeline: Pipeline,
    pub backend: String,
    pub status: Status,
    pub prediction: Option<Hypothesis>,
    /// Gold category label (MFP) or held-out molecule names (MPC).
    pub gold: Answer,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gold_molecule_ids: Vec<MoleculeId>,
    /// Abstention reason or failure message.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub network_failure: bool,
}

impl InstanceResult {
    pub fn new(instance: &TaskInstance, pipeline: Pipeline, backend: &str, outcome: Outcome) -> Self {
        let (gold, gold_molecule_ids) = match instance.task {
            Task::Mfp => (Answer::Category(instance.category.to_string()), Vec::new()),
            Task::Mpc => {
                (Answer::Molecules(instance.missing_names()), instance.missing.iter().map(|m| m.molecule_id).collect())
            }
        };
        let (status, prediction, detail, network_failure) = match outcome {
            Outcome::Answered(h) => (Status::Answered, Some(h), None, false),
            Outcome::Abstained(reason) => (Status::Abstained, None, Some(reason), false),
            Outcome::Failed { message, network } => (Status::Failed, None, Some(message), network),
        };
        Self {
            id: instance.id.clone(),
            task: instance.task,
            split: instance.split,
            pipeline,
            backend: backend.to_string(),
            status,
            prediction,
            gold,
            gold_molecule_ids,
            detail,
            network_failure,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub parallelism: usize,
    /// Where to write the journal, traces and results. `None` keeps
    /// everything in memory.
    pub out_dir: Option<PathBuf>,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self { parallelism: 4, out_dir: None }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BatchError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("cannot start worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Results(#[from] JsonlError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> BatchError + '_ {
    move |source| BatchError::Io { path: path.display().to_string(), source }
}

/// Completed journal entries for this pipeline and backend. A torn last
/// line from an interrupted run is skipped.
fn read_journal(
    path: &Path,
    pipeline: Pipeline,
    backend: &str,
) -> Result<BTreeMap<String, InstanceResult>, BatchError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(BTreeMap::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut done = BTreeMap::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        match serde_json::from_str::<InstanceResult>(line) {
            Ok(r) if r.pipeline == pipeline && r.backend == backend && r.status != Status::Failed => {
                done.insert(r.id.clone(), r);
            }
            Ok(_) => {}
            Err(e) => log::warn!("{}:{}: skipping unreadable journal line: {e}", path.display(), i + 1),
        }
    }
    Ok(done)
}

/// Run `pipeline` over `instances` on a pool of `parallelism` workers.
///
/// Results come back in instance-id order. With an output directory, each
/// finished instance is appended to the journal and its trace written, so
/// a restarted batch skips what already finished; failed instances are
/// retried.
pub fn run_batch(
    instances: &[TaskInstance],
    pipeline: Pipeline,
    res: &Resources<'_>,
    options: &BatchOptions,
) -> Result<Vec<InstanceResult>, BatchError> {
    let backend = res.backend_config.label();
    let mut done = BTreeMap::new();
    let mut journal = None;
    if let Some(dir) = &options.out_dir {
        fs::create_dir_all(dir.join(TRACE_DIR)).map_err(io_err(dir))?;
        let path = dir.join(JOURNAL_FILE);
        done = read_journal(&path, pipeline, &backend)?;
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(io_err(&path))?;
        journal = Some((path, Mutex::new(file)));
    }
    let todo: Vec<&TaskInstance> = instances.iter().filter(|i| !done.contains_key(&i.id)).collect();
    if !done.is_empty() {
        log::info!("resuming: {} instances already done, {} to run", instances.len() - todo.len(), todo.len());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.parallelism.max(1))
        .build()
        .map_err(|e| BatchError::Pool(e.to_string()))?;
    let fresh: Vec<InstanceResult> = pool.install(|| {
        todo.par_iter()
            .map(|instance| {
                let (outcome, trace) = run_instance(instance, pipeline, res);
                let result = InstanceResult::new(instance, pipeline, &backend, outcome);
                if let (Some(dir), Some((path, file))) = (&options.out_dir, &journal) {
                    let trace_path = dir.join(TRACE_DIR).join(format!("{}.json", instance.id));
                    let bytes = fsutil::to_pretty_json(&trace).expect("traces serialize");
                    fsutil::write_atomic(&trace_path, &bytes).map_err(io_err(&trace_path))?;
                    let mut line = serde_json::to_vec(&result).expect("results serialize");
                    line.push(b'\n');
                    let mut f = file.lock().unwrap();
                    f.write_all(&line).and_then(|_| f.flush()).map_err(io_err(path))?;
                }
                Ok(result)
            })
            .collect::<Result<_, BatchError>>()
    })?;
    let ids: std::collections::BTreeSet<&str> = instances.iter().map(|i| i.id.as_str()).collect();
    let mut results: Vec<InstanceResult> =
        done.into_values().filter(|r| ids.contains(r.id.as_str())).chain(fresh).collect();
    results.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(dir) = &options.out_dir {
        let path = dir.join(RESULTS_FILE);
        let bytes = fsutil::to_jsonl(&results).expect("results serialize");
        fsutil::write_atomic(&path, &bytes).map_err(io_err(&path))?;
    }
    Ok(results)
}

/// Load a results file written by [`run_batch`].
pub fn read_results(path: &Path) -> Result<Vec<InstanceResult>, BatchError> {
    Ok(fsutil::read_jsonl(path)?.into_iter().map(|(_, r)| r).collect())
}
