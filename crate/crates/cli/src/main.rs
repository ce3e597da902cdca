mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use config::{RetrieverKind, RunConfig};
use flavorbench_core::agent::Pipeline;
use flavorbench_core::dataset::SplitTag;
use flavorbench_core::eval::JudgeMode;
use flavorbench_core::llm::BackendKind;
use flavorbench_core::task::Task;
use std::path::PathBuf;
use std::process::ExitCode;

/// Food-chemistry reasoning benchmark: data preparation, inference runs and scoring.
///
/// Settings come from an optional JSON config (`--config`); flags given on
/// the command line override it. Exit codes: 0 success, 1 usage or config
/// error, 2 data error, 3 external-service error.
#[derive(Parser, Debug)]
#[command(name = "flavorbench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Download food pages from a FlavorDB-style API into an export directory.
    Fetch(FetchArgs),
    /// Validate an export and write the molecule, food and association stores.
    Ingest(IngestArgs),
    /// Write the seeded 80/10/10 train/dev/test split.
    Split(SplitArgs),
    /// Print the molecule-count distribution over foods.
    Stats(StatsArgs),
    /// Write one binary molecule vector per food.
    Encode(EncodeArgs),
    /// Project the food vectors onto their principal components and emit plot data.
    Pca(PcaArgs),
    /// Build the retrieval index over train-split passages.
    Index(IndexArgs),
    /// Search for evidence snippets and store them in the offline cache.
    CollectEvidence(CollectArgs),
    /// Run a pipeline over the task instances; writes results, journal and traces.
    Run(RunArgs),
    /// Score a run's results.
    Eval(EvalArgs),
    /// Combine evaluated runs into the summary table.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON run config; every key is optional [default: built-in defaults]
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DataArg {
    /// Store directory written by `ingest` [default: paths.data, data/stores]
    #[arg(long, value_name = "DIR")]
    data: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SplitFileArg {
    /// Split file written by `split` [default: paths.split, data/split.json]
    #[arg(long, value_name = "FILE")]
    split: Option<PathBuf>,
}

/// Which run a command acts on.
#[derive(Args, Debug)]
struct Selection {
    /// Task [default: task, mfp]
    #[arg(long, value_enum)]
    task: Option<TaskArg>,
    /// Pipeline [default: pipeline, agent]
    #[arg(long, value_enum)]
    pipeline: Option<PipelineArg>,
    /// Model backend [default: backend.kind, oracle]
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
}

#[derive(Args, Debug)]
struct FetchArgs {
    #[command(flatten)]
    common: Common,
    /// Export directory [default: paths.export, data/export]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// API root serving /foods and /foods/{id} [default: fetch.base_url, required]
    #[arg(long, value_name = "URL")]
    base_url: Option<String>,
    /// Requests per second, 0 for no limit [default: fetch.rate_limit, 2]
    #[arg(long, value_name = "N")]
    rate_limit: Option<f64>,
}

#[derive(Args, Debug)]
struct IngestArgs {
    #[command(flatten)]
    common: Common,
    /// Export directory [default: paths.export, data/export]
    #[arg(long = "in", value_name = "DIR")]
    input: Option<PathBuf>,
    /// Store directory [default: paths.data, data/stores]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SplitArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArg,
    /// Shuffle seed [default: agent.split_seed, 42]
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Split file [default: paths.split, data/split.json]
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArg,
    /// Also write the statistics as JSON here [default: stdout only]
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EncodeArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArg,
    /// JSONL of {food_id, bits} [default: data/features.jsonl]
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PcaArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArg,
    /// Output directory for pca.json, pca.csv and pca.svg [default: data/pca]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Number of components, at least 2 [default: 2]
    #[arg(long, value_name = "N")]
    components: Option<usize>,
}

#[derive(Args, Debug)]
struct IndexArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArg,
    #[command(flatten)]
    split: SplitFileArg,
    /// BM25 index file [default: paths.index, data/bm25.json]
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// BM25 term-frequency saturation [default: retrieval.k1, 1.2]
    #[arg(long)]
    k1: Option<f64>,
    /// BM25 length normalization [default: retrieval.b, 0.75]
    #[arg(long)]
    b: Option<f64>,
    /// Also embed the corpus for the dense retriever when set to dense [default: retrieval.retriever, bm25]
    #[arg(long, value_enum)]
    retriever: Option<RetrieverKind>,
}

#[derive(Args, Debug)]
struct CollectArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArg,
    #[command(flatten)]
    split: SplitFileArg,
    /// Evidence cache directory [default: paths.cache, data/evidence]
    #[arg(long, value_name = "DIR")]
    cache: Option<PathBuf>,
    /// Offline search fixture instead of the search API [default: evidence.fixture, none]
    #[arg(long, value_name = "FILE")]
    fixture: Option<PathBuf>,
    /// Worker threads [default: parallelism, 4]
    #[arg(long, value_name = "N")]
    parallelism: Option<usize>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    select: Selection,
    /// Reply script for the scripted backend [default: backend.script, none]
    #[arg(long, value_name = "FILE")]
    script: Option<PathBuf>,
    /// Model name sent to the http backend [default: backend.model_name, oracle]
    #[arg(long)]
    model: Option<String>,
    /// Splits whose foods become instances, comma separated [default: agent.splits, test]
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    splits: Option<Vec<SplitTag>>,
    /// Demonstrations per ICL prompt [default: retrieval.k, 3]
    #[arg(long)]
    k: Option<usize>,
    /// Starting-point cap, at most 10 [default: agent.limit, 10]
    #[arg(long)]
    limit: Option<usize>,
    /// Demonstration retriever [default: retrieval.retriever, bm25]
    #[arg(long, value_enum)]
    retriever: Option<RetrieverKind>,
    /// Worker threads [default: parallelism, 4]
    #[arg(long, value_name = "N")]
    parallelism: Option<usize>,
    /// Run directory [default: {paths.out}/{task}-{pipeline}-{backend}]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Refuse every outbound connection [default: off]
    #[arg(long)]
    offline: bool,
    #[command(flatten)]
    data: DataArg,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    select: Selection,
    #[command(flatten)]
    data: DataArg,
    /// Run directory holding results.jsonl [default: {paths.out}/{task}-{pipeline}-{backend}]
    #[arg(long, value_name = "DIR")]
    run: Option<PathBuf>,
    /// Category judge [default: eval.judge, rule]
    #[arg(long, value_enum)]
    judge: Option<JudgeArg>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[command(flatten)]
    common: Common,
    /// Directory searched for */eval.json [default: paths.out, runs]
    #[arg(long, value_name = "DIR")]
    runs: Option<PathBuf>,
    /// Where report.json, report.txt and report.csv go [default: the runs directory]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum TaskArg {
    Mfp,
    Mpc,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum PipelineArg {
    #[value(alias = "zero_shot")]
    ZeroShot,
    Icl,
    Agent,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum BackendArg {
    Oracle,
    Scripted,
    Http,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum JudgeArg {
    Rule,
    Llm,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Mfp => Task::Mfp,
            TaskArg::Mpc => Task::Mpc,
        }
    }
}

impl From<PipelineArg> for Pipeline {
    fn from(p: PipelineArg) -> Self {
        match p {
            PipelineArg::ZeroShot => Pipeline::ZeroShot,
            PipelineArg::Icl => Pipeline::Icl,
            PipelineArg::Agent => Pipeline::Agent,
        }
    }
}

impl From<BackendArg> for BackendKind {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Oracle => BackendKind::Oracle,
            BackendArg::Scripted => BackendKind::Scripted,
            BackendArg::Http => BackendKind::Http,
        }
    }
}

impl From<JudgeArg> for JudgeMode {
    fn from(j: JudgeArg) -> Self {
        match j {
            JudgeArg::Rule => JudgeMode::Rule,
            JudgeArg::Llm => JudgeMode::Llm,
        }
    }
}

/// A command failure and the exit code it maps to.
#[derive(Debug)]
pub enum Fail {
    Usage(anyhow::Error),
    Data(anyhow::Error),
    External(anyhow::Error),
}

impl Fail {
    fn code(&self) -> u8 {
        match self {
            Fail::Usage(_) => 1,
            Fail::Data(_) => 2,
            Fail::External(_) => 3,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Fail::Usage(e) | Fail::Data(e) | Fail::External(e) => e,
        }
    }
}

fn load_config(common: &Common) -> Result<RunConfig, Fail> {
    match &common.config {
        Some(path) => RunConfig::load(path).map_err(|e| Fail::Usage(e.into())),
        None => Ok(RunConfig::default()),
    }
}

fn dispatch(command: Command) -> Result<(), Fail> {
    use commands as c;
    match command {
        Command::Fetch(a) => {
            let mut cfg = load_config(&a.common)?;
            if let Some(v) = a.out {
                cfg.paths.export = v;
            }
            if let Some(v) = a.base_url {
                cfg.fetch.base_url = v;
            }
            if let Some(v) = a.rate_limit {
                cfg.fetch.rate_limit = v;
            }
            c::fetch(&cfg)
        }
        Command::Ingest(a) => {
            let mut cfg = load_config(&a.common)?;
            if let Some(v) = a.input {
                cfg.paths.export = v;
            }
            if let Some(v) = a.out {
                cfg.paths.data = v;
            }
            c::ingest(&cfg)
        }
        Command::Split(a) => {
            let mut cfg = load_config(&a.common)?;
            apply_data(&mut cfg, a.data);
            if let Some(v) = a.seed {
                cfg.agent.split_seed = v;
            }
            if let Some(v) = a.out {
                cfg.paths.split = v;
            }
            c::split(&cfg)
        }
        Command::Stats(a) => {
            let mut cfg = load_config(&a.common)?;
            apply_data(&mut cfg, a.data);
            c::stats(&cfg, a.out.as_deref())
        }
        Command::Encode(a) => {
            let mut cfg = load_config(&a.common)?;
            apply_data(&mut cfg, a.data);
            c::encode(&cfg, &a.out.unwrap_or_else(|| "data/features.jsonl".into()))
        }
        Command::Pca(a) => {
            let mut cfg = load_config(&a.common)?;
            apply_data(&mut cfg, a.data);
            c::pca(&cfg, &a.out.unwrap_or_else(|| "data/pca".into()), a.components.unwrap_or(2))
        }
        Command::Index(a) => {
            let mut cfg = load_config(&a.common)?;
            apply_data(&mut cfg, a.data);
            apply_split(&mut cfg, a.split);
            if let Some(v) = a.out {
                cfg.paths.index = v;
            }
            if let Some(v) = a.k1 {
                cfg.retrieval.k1 = v;
            }
            if let Some(v) = a.b {
                cfg.retrieval.b = v;
            }
            if let Some(v) = a.retriever {
                cfg.retrieval.retriever = v;
            }
            validated(&cfg)?;
            c::index(&cfg)
        }
        Command::CollectEvidence(a) => {
            let mut cfg = load_config(&a.common)?;
            apply_data(&mut cfg, a.data);
            apply_split(&mut cfg, a.split);
            if let Some(v) = a.cache {
                cfg.paths.cache = v;
            }
            if let Some(v) = a.fixture {
                cfg.evidence.fixture = Some(v);
            }
            if let Some(v) = a.parallelism {
                cfg.parallelism = v;
                cfg.evidence.collect.parallelism = v;
            }
            validated(&cfg)?;
            c::collect_evidence(&cfg)
        }
        Command::Run(a) => {
            let mut cfg = load_config(&a.common)?;
            apply_data(&mut cfg, a.data);
            apply_selection(&mut cfg, a.select);
            if let Some(v) = a.script {
                cfg.backend.script = Some(v);
            }
            if let Some(v) = a.model {
                cfg.backend.model_name = v;
            }
            if let Some(v) = a.splits {
                cfg.agent.splits = v;
            }
            if let Some(v) = a.k {
                cfg.retrieval.k = v;
            }
            if let Some(v) = a.limit {
                cfg.agent.limit = v;
            }
            if let Some(v) = a.retriever {
                cfg.retrieval.retriever = v;
            }
            if let Some(v) = a.parallelism {
                cfg.parallelism = v;
            }
            validated(&cfg)?;
            let dir = a.out.unwrap_or_else(|| cfg.run_dir());
            c::run(&cfg, &dir, a.offline)
        }
        Command::Eval(a) => {
            let mut cfg = load_config(&a.common)?;
            apply_data(&mut cfg, a.data);
            apply_selection(&mut cfg, a.select);
            if let Some(v) = a.judge {
                cfg.eval.judge = v.into();
            }
            validated(&cfg)?;
            let dir = a.run.unwrap_or_else(|| cfg.run_dir());
            c::eval(&cfg, &dir)
        }
        Command::Report(a) => {
            let cfg = load_config(&a.common)?;
            let runs = a.runs.unwrap_or_else(|| cfg.paths.out.clone());
            let out = a.out.unwrap_or_else(|| runs.clone());
            c::report(&runs, &out)
        }
    }
}

fn apply_data(cfg: &mut RunConfig, data: DataArg) {
    if let Some(v) = data.data {
        cfg.paths.data = v;
    }
}

fn apply_selection(cfg: &mut RunConfig, select: Selection) {
    if let Some(v) = select.task {
        cfg.task = v.into();
    }
    if let Some(v) = select.pipeline {
        cfg.pipeline = v.into();
    }
    if let Some(v) = select.backend {
        cfg.backend.kind = v.into();
    }
}

fn apply_split(cfg: &mut RunConfig, split: SplitFileArg) {
    if let Some(v) = split.split {
        cfg.paths.split = v;
    }
}

/// Re-check the config after flag overrides.
fn validated(cfg: &RunConfig) -> Result<(), Fail> {
    cfg.validate().map_err(|e| Fail::Usage(e.into()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(fail) => {
            eprintln!("error: {:#}", fail.error());
            ExitCode::from(fail.code())
        }
    }
}
