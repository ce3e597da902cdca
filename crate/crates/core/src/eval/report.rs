use super::judge::{judge_category, JudgeMode, JudgeVerdict, LlmJudge, SynonymTable};
use super::score::{score_mpc, MpcScore, DEFAULT_MAX_MISSING_SMILES};
use crate::agent::{Answer, InstanceResult, Pipeline, Status};
use crate::chem::GroupTable;
use crate::dataset::Stores;
use crate::fsutil;
use crate::task::Task;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const REPORT_FORMAT_VERSION: u32 = 1;
pub const EVAL_FILE: &str = "eval.json";

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("results mix {0}; evaluate one task, pipeline and backend at a time")]
    Mixed(&'static str),
    #[error("no results to evaluate")]
    Empty,
    #[error("{id}: gold answer does not match the task")]
    GoldShape { id: String },
    #[error("counts do not reconcile: {0}")]
    Reconcile(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

/// Scoring of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceScore {
    pub id: String,
    pub status: Status,
    /// MFP: the judge's decision; MPC: unused.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<JudgeVerdict>,
    /// MPC: functional-group F1 (0 for abstentions and failures).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mpc: Option<MpcScore>,
    pub excluded: Option<String>,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub task: Task,
    pub pipeline: Pipeline,
    pub backend: String,
    pub judge: JudgeMode,
    pub instance_count: usize,
    /// Answered plus abstained, excluding exclusions.
    pub scored: usize,
    pub answered: usize,
    pub abstentions: usize,
    pub failures: usize,
    pub network_failures: usize,
    pub excluded: Vec<Exclusion>,
    /// MFP: equivalent verdicts.
    pub correct: usize,
    /// MFP accuracy in percent over non-excluded instances.
    pub accuracy: Option<f64>,
    /// MPC mean F1 over non-excluded instances.
    pub mean_f1: Option<f64>,
    pub records: Vec<InstanceScore>,
}

impl EvalReport {
    /// Recompute every count from the records and compare.
    pub fn check(&self) -> Result<(), EvalError> {
        let fail = |m: String| Err(EvalError::Reconcile(m));
        let n = self.records.len();
        if n != self.instance_count {
            return fail(format!("{n} records for {} instances", self.instance_count));
        }
        let excluded = self.records.iter().filter(|r| r.excluded.is_some()).count();
        let kept: Vec<&InstanceScore> = self.records.iter().filter(|r| r.excluded.is_none()).collect();
        let count = |s: Status| kept.iter().filter(|r| r.status == s).count();
        let (answered, abstained, failed) = (count(Status::Answered), count(Status::Abstained), count(Status::Failed));
        if excluded != self.excluded.len() {
            return fail(format!("{excluded} excluded records but {} listed exclusions", self.excluded.len()));
        }
        if answered != self.answered || abstained != self.abstentions || failed != self.failures {
            return fail("status counts differ from the records".into());
        }
        if self.scored != answered + abstained || excluded + self.scored + self.failures != n {
            return fail(format!(
                "excluded {excluded} + scored {} + failed {} != total {n}",
                self.scored, self.failures
            ));
        }
        let correct = kept.iter().filter(|r| r.correct).count();
        if correct != self.correct {
            return fail(format!("{correct} correct records but header says {}", self.correct));
        }
        let denom = kept.len();
        match self.task {
            Task::Mfp => {
                let expect = (denom > 0).then(|| 100.0 * correct as f64 / denom as f64);
                if self.accuracy != expect || !self.accuracy.map_or(true, |a| (0.0..=100.0).contains(&a)) {
                    return fail(format!("accuracy {:?} should be {expect:?}", self.accuracy));
                }
            }
            Task::Mpc => {
                let sum: f64 = kept.iter().map(|r| r.f1.unwrap_or(0.0)).sum();
                let expect = (denom > 0).then(|| sum / denom as f64);
                if self.mean_f1 != expect || !self.mean_f1.map_or(true, |f| (0.0..=1.0).contains(&f)) {
                    return fail(format!("mean F1 {:?} should be {expect:?}", self.mean_f1));
                }
            }
        }
        Ok(())
    }

    /// Build the header from per-instance records.
    pub fn assemble(
        task: Task,
        pipeline: Pipeline,
        backend: String,
        judge: JudgeMode,
        mut records: Vec<InstanceScore>,
    ) -> Self {
        records.sort_by(|a, b| a.id.cmp(&b.id));
        let excluded: Vec<Exclusion> = records
            .iter()
            .filter_map(|r| r.excluded.as_ref().map(|reason| Exclusion { id: r.id.clone(), reason: reason.clone() }))
            .collect();
        let kept: Vec<&InstanceScore> = records.iter().filter(|r| r.excluded.is_none()).collect();
        let count = |s: Status| kept.iter().filter(|r| r.status == s).count();
        let (answered, abstentions, failures) =
            (count(Status::Answered), count(Status::Abstained), count(Status::Failed));
        let correct = kept.iter().filter(|r| r.correct).count();
        let denom = kept.len();
        let (accuracy, mean_f1) = match task {
            Task::Mfp => ((denom > 0).then(|| 100.0 * correct as f64 / denom as f64), None),
            Task::Mpc => {
                (None, (denom > 0).then(|| kept.iter().map(|r| r.f1.unwrap_or(0.0)).sum::<f64>() / denom as f64))
            }
        };
        Self {
            format_version: REPORT_FORMAT_VERSION,
            task,
            pipeline,
            backend,
            judge,
            instance_count: records.len(),
            scored: answered + abstentions,
            answered,
            abstentions,
            failures,
            network_failures: 0,
            excluded,
            correct,
            accuracy,
            mean_f1,
            records,
        }
    }

    /// Headline metric as printed in tables.
    pub fn metric(&self) -> String {
        match self.task {
            Task::Mfp => self.accuracy.map_or("n/a".into(), |a| format!("{a:.1}")),
            Task::Mpc => self.mean_f1.map_or("n/a".into(), |f| format!("{f:.3}")),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), EvalError> {
        self.check()?;
        let bytes = fsutil::to_pretty_json(self).expect("reports serialize");
        fsutil::write_atomic(path, &bytes).map_err(|source| EvalError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| EvalError::Io { path: path.display().to_string(), source })?;
        let report: EvalReport = serde_json::from_str(&text)
            .map_err(|e| EvalError::Format { path: path.display().to_string(), message: e.to_string() })?;
        report.check()?;
        Ok(report)
    }
}

pub struct EvalOptions<'a> {
    pub synonyms: &'a SynonymTable,
    pub groups: &'a GroupTable,
    pub max_missing_smiles: f64,
    /// Opt-in LLM judge; the rule judge is used otherwise.
    pub llm: Option<LlmJudge<'a>>,
}

impl Default for EvalOptions<'_> {
    fn default() -> Self {
        Self {
            synonyms: SynonymTable::builtin(),
            groups: GroupTable::builtin(),
            max_missing_smiles: DEFAULT_MAX_MISSING_SMILES,
            llm: None,
        }
    }
}

fn same<T: PartialEq>(
    results: &[InstanceResult],
    what: &'static str,
    f: impl Fn(&InstanceResult) -> T,
) -> Result<T, EvalError> {
    let first = f(&results[0]);
    if results.iter().any(|r| f(r) != first) {
        return Err(EvalError::Mixed(what));
    }
    Ok(first)
}

/// Score a results file from one run.
pub fn evaluate(
    results: &[InstanceResult],
    stores: &Stores,
    options: &EvalOptions<'_>,
) -> Result<EvalReport, EvalError> {
    if results.is_empty() {
        return Err(EvalError::Empty);
    }
    let task = same(results, "tasks", |r| r.task)?;
    let pipeline = same(results, "pipelines", |r| r.pipeline)?;
    let backend = same(results, "backends", |r| r.backend.clone())?;
    let judge = if options.llm.is_some() { JudgeMode::Llm } else { JudgeMode::Rule };
    let mut records = Vec::with_capacity(results.len());
    for r in results {
        let mut score = InstanceScore {
            id: r.id.clone(),
            status: r.status,
            verdict: None,
            f1: None,
            mpc: None,
            excluded: None,
            correct: false,
        };
        let predicted = r.prediction.as_ref().map(|h| &h.answer);
        match (&r.gold, task) {
            (Answer::Category(gold), Task::Mfp) => {
                if let Some(Answer::Category(p)) = predicted {
                    let v = judge_category(&r.id, p, gold, options.llm.as_ref(), options.synonyms);
                    score.correct = v.equivalent;
                    score.verdict = Some(v);
                }
            }
            (Answer::Molecules(_), Task::Mpc) => {
                let names: &[String] = match predicted {
                    Some(Answer::Molecules(m)) => m,
                    _ => &[],
                };
                let m = score_mpc(
                    names,
                    &r.gold_molecule_ids,
                    &stores.molecules,
                    options.groups,
                    options.max_missing_smiles,
                );
                score.excluded = m.excluded.clone();
                if m.excluded.is_none() {
                    score.f1 = Some(if r.status == Status::Answered { m.f1.unwrap_or(0.0) } else { 0.0 });
                    score.correct = score.f1 == Some(1.0);
                }
                score.mpc = Some(m);
            }
            _ => return Err(EvalError::GoldShape { id: r.id.clone() }),
        }
        records.push(score);
    }
    let mut report = EvalReport::assemble(task, pipeline, backend, judge, records);
    report.network_failures = results.iter().filter(|r| r.network_failure).count();
    report.check()?;
    Ok(report)
}

/// Table-style summary: one row per pipeline and backend, one column per task.
pub fn render_table(reports: &[EvalReport]) -> String {
    let rows = summary_rows(reports);
    let header = ["Pipeline", "Backend", "MFP Acc (%)", "MPC F1", "Instances", "Abstained", "Failed", "Excluded"];
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            if i < 2 {
                let _ = write!(s, "{c:<w$}");
            } else {
                let _ = write!(s, "{c:>w$}");
            }
        }
        s.trim_end().to_string()
    };
    let mut out = line(&header.iter().map(|h| h.to_string()).collect::<Vec<_>>());
    out.push('\n');
    out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    out.push('\n');
    for row in &rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

fn summary_rows(reports: &[EvalReport]) -> Vec<Vec<String>> {
    let mut keys: Vec<(Pipeline, String)> = reports.iter().map(|r| (r.pipeline, r.backend.clone())).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(pipeline, backend)| {
            let of = |task| reports.iter().find(|r| r.pipeline == pipeline && r.backend == backend && r.task == task);
            let (mfp, mpc) = (of(Task::Mfp), of(Task::Mpc));
            let both: Vec<&EvalReport> = mfp.into_iter().chain(mpc).collect();
            let sum = |f: fn(&EvalReport) -> usize| both.iter().map(|r| f(r)).sum::<usize>().to_string();
            vec![
                pipeline.to_string(),
                backend,
                mfp.map_or("-".into(), |r| r.metric()),
                mpc.map_or("-".into(), |r| r.metric()),
                sum(|r| r.instance_count),
                sum(|r| r.abstentions),
                sum(|r| r.failures),
                sum(|r| r.excluded.len()),
            ]
        })
        .collect()
}

pub fn render_csv(reports: &[EvalReport]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "pipeline",
        "backend",
        "mfp_accuracy",
        "mpc_mean_f1",
        "instances",
        "abstained",
        "failed",
        "excluded",
    ])?;
    for row in summary_rows(reports) {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub task: Task,
    pub pipeline: Pipeline,
    pub backend: String,
    pub instance_count: usize,
    pub accuracy: Option<f64>,
    pub mean_f1: Option<f64>,
    pub abstentions: usize,
    pub failures: usize,
    pub excluded: usize,
}

/// Write `report.json`, `report.txt` and `report.csv` into `dir`.
pub fn write_reports(reports: &[EvalReport], dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    for r in reports {
        r.check()?;
    }
    let mut sorted: Vec<&EvalReport> = reports.iter().collect();
    sorted.sort_by(|a, b| (a.pipeline, &a.backend, a.task).cmp(&(b.pipeline, &b.backend, b.task)));
    let summary: Vec<SummaryRow> = sorted
        .iter()
        .map(|r| SummaryRow {
            task: r.task,
            pipeline: r.pipeline,
            backend: r.backend.clone(),
            instance_count: r.instance_count,
            accuracy: r.accuracy,
            mean_f1: r.mean_f1,
            abstentions: r.abstentions,
            failures: r.failures,
            excluded: r.excluded.len(),
        })
        .collect();
    let json = serde_json::json!({ "format_version": REPORT_FORMAT_VERSION, "rows": summary });
    let csv =
        render_csv(reports).map_err(|e| EvalError::Format { path: "report.csv".into(), message: e.to_string() })?;
    let files = [
        ("report.json", fsutil::to_pretty_json(&json).expect("summary serializes")),
        ("report.txt", render_table(reports).into_bytes()),
        ("report.csv", csv.into_bytes()),
    ];
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        fsutil::write_atomic(&path, &bytes)
            .map_err(|source| EvalError::Io { path: path.display().to_string(), source })?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: usize, status: Status, correct: bool, excluded: bool) -> InstanceScore {
        InstanceScore {
            id: format!("mfp-{id:06}"),
            status,
            verdict: None,
            f1: None,
            mpc: None,
            excluded: excluded.then(|| "no structures".to_string()),
            correct,
        }
    }

    #[test]
    fn denominator_drops_exclusions_only() {
        let mut records = Vec::new();
        for i in 0..10 {
            let status = if i == 9 {
                Status::Failed
            } else if i == 8 {
                Status::Abstained
            } else {
                Status::Answered
            };
            records.push(rec(i, status, i < 4, i == 6 || i == 7));
        }
        let r = EvalReport::assemble(Task::Mfp, Pipeline::Icl, "mock".into(), JudgeMode::Rule, records);
        assert_eq!(r.accuracy, Some(50.0));
        assert_eq!((r.scored, r.failures, r.excluded.len()), (7, 1, 2));
        r.check().unwrap();
    }

    #[test]
    fn tampered_counts_are_rejected() {
        let records = vec![rec(1, Status::Answered, true, false), rec(2, Status::Answered, false, false)];
        let mut r = EvalReport::assemble(Task::Mfp, Pipeline::Icl, "mock".into(), JudgeMode::Rule, records);
        r.correct = 2;
        assert!(matches!(r.check(), Err(EvalError::Reconcile(_))));
        let dir = tempfile::tempdir().unwrap();
        assert!(r.save(&dir.path().join("eval.json")).is_err());
        assert!(!dir.path().join("eval.json").exists());
    }

    #[test]
    fn table_layout() {
        let mfp = EvalReport::assemble(
            Task::Mfp,
            Pipeline::Agent,
            "mock:oracle".into(),
            JudgeMode::Rule,
            vec![rec(1, Status::Answered, true, false)],
        );
        let mut mpc = mfp.clone();
        mpc.task = Task::Mpc;
        mpc.accuracy = None;
        mpc.mean_f1 = Some(1.0);
        let t = render_table(&[mfp, mpc]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("Pipeline"));
        assert!(lines[2].starts_with("agent") && lines[2].contains("100.0") && lines[2].contains("1.000"));
    }
}
