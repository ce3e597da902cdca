use crate::config::{RetrieverKind, RunConfig};
use crate::Fail;
use anyhow::{anyhow, Context};
use flavorbench_core::agent::{read_results, run_batch, BatchOptions, Pipeline, Resources, Status, RESULTS_FILE};
use flavorbench_core::analysis::{build_frequency_table, emit_plot_data, pca as run_pca, select_starting_points};
use flavorbench_core::dataset::fetch::fetch as fetch_pages;
use flavorbench_core::dataset::{
    self, encode as encode_foods, molecule_vocabulary, DatasetError, DatasetSplit, Stores,
};
use flavorbench_core::eval::{
    evaluate, render_table, write_reports, EvalOptions, EvalReport, JudgeMode, LlmJudge, SynonymTable, EVAL_FILE,
};
use flavorbench_core::evidence::{
    collect, make_queries, EvidenceCache, FixtureSearchClient, HttpSearchClient, SearchClient,
};
use flavorbench_core::fsutil;
use flavorbench_core::llm::{LlmError, PromptCatalog};
use flavorbench_core::net::{self, Clock, RateLimiter, SystemClock};
use flavorbench_core::retrieval::{
    build_corpus, Bm25Index, DemoRetriever, DenseIndex, DenseRetriever, HttpEmbeddingService,
};
use flavorbench_core::task::{make_instances, Task, TaskInstance};
use std::path::Path;
use std::sync::Arc;

type Outcome = Result<(), Fail>;

fn data_err(e: impl Into<anyhow::Error>) -> Fail {
    Fail::Data(e.into())
}

fn dataset_err(e: DatasetError) -> Fail {
    match e {
        DatasetError::FetchAborted(_) => Fail::External(e.into()),
        other => Fail::Data(other.into()),
    }
}

fn llm_err(e: LlmError) -> Fail {
    match e {
        LlmError::InvalidRequest(_) | LlmError::Mock(_) => Fail::Usage(e.into()),
        other => Fail::External(other.into()),
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Outcome {
    let bytes = fsutil::to_pretty_json(value).map_err(data_err)?;
    fsutil::write_atomic(path, &bytes).with_context(|| path.display().to_string()).map_err(Fail::Data)
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn load_stores(cfg: &RunConfig) -> Result<Stores, Fail> {
    Stores::load(&cfg.paths.data)
        .with_context(|| format!("loading stores from {} (run `ingest` first)", cfg.paths.data.display()))
        .map_err(Fail::Data)
}

fn load_split(cfg: &RunConfig) -> Result<DatasetSplit, Fail> {
    let path = &cfg.paths.split;
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {} (run `split` first)", path.display()))
        .map_err(Fail::Data)?;
    serde_json::from_str(&text).with_context(|| path.display().to_string()).map_err(Fail::Data)
}

fn instances(cfg: &RunConfig, stores: &Stores, split: &DatasetSplit, task: Task) -> Result<Vec<TaskInstance>, Fail> {
    make_instances(stores, split, task, &cfg.agent.splits, cfg.agent.instance_seed, cfg.agent.holdout_fraction)
        .map_err(|e| Fail::Usage(e.into()))
}

fn clock() -> Arc<dyn Clock> {
    Arc::new(SystemClock::default())
}

pub fn fetch(cfg: &RunConfig) -> Outcome {
    if cfg.fetch.base_url.is_empty() {
        return Err(Fail::Usage(anyhow!("fetch needs --base-url or fetch.base_url in the config")));
    }
    let manifest = fetch_pages(&cfg.fetch, &cfg.paths.export, clock()).map_err(dataset_err)?;
    log::info!(
        "fetched {} pages ({} requested, {} skipped) into {}",
        manifest.completed.len(),
        manifest.requested.len(),
        manifest.skipped.len(),
        cfg.paths.export.display()
    );
    Ok(())
}

pub fn ingest(cfg: &RunConfig) -> Outcome {
    let stores = dataset::ingest(&cfg.paths.export).map_err(dataset_err)?;
    let manifest = stores.save(&cfg.paths.data).map_err(dataset_err)?;
    print_json(&manifest);
    Ok(())
}

pub fn split(cfg: &RunConfig) -> Outcome {
    let stores = load_stores(cfg)?;
    let split = dataset::split(&stores.foods, cfg.agent.split_seed).map_err(dataset_err)?;
    write_json(&cfg.paths.split, &split)?;
    log::info!(
        "split seed {}: {} train, {} dev, {} test -> {}",
        split.seed,
        split.train.len(),
        split.dev.len(),
        split.test.len(),
        cfg.paths.split.display()
    );
    Ok(())
}

pub fn stats(cfg: &RunConfig, out: Option<&Path>) -> Outcome {
    let stores = load_stores(cfg)?;
    let stats = dataset::stats(&stores.foods);
    print_json(&stats);
    if let Some(path) = out {
        write_json(path, &stats)?;
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct FeatureLine {
    food_id: u64,
    bits: String,
}

pub fn encode(cfg: &RunConfig, out: &Path) -> Outcome {
    let stores = load_stores(cfg)?;
    let vocabulary = molecule_vocabulary(&stores.molecules);
    let vectors = encode_foods(&stores.foods, &vocabulary).map_err(dataset_err)?;
    let lines = vectors.iter().map(|v| FeatureLine { food_id: v.food_id, bits: v.bit_string() });
    let bytes = fsutil::to_jsonl(lines).map_err(data_err)?;
    fsutil::write_atomic(out, &bytes).with_context(|| out.display().to_string()).map_err(Fail::Data)?;
    log::info!("{} foods x {} molecules -> {}", vectors.len(), vocabulary.len(), out.display());
    Ok(())
}

pub fn pca(cfg: &RunConfig, out: &Path, components: usize) -> Outcome {
    if components < 2 {
        return Err(Fail::Usage(anyhow!("--components must be at least 2")));
    }
    let stores = load_stores(cfg)?;
    let vectors = encode_foods(&stores.foods, &molecule_vocabulary(&stores.molecules)).map_err(dataset_err)?;
    let result = run_pca(&vectors, components).map_err(data_err)?;
    std::fs::create_dir_all(out).with_context(|| out.display().to_string()).map_err(Fail::Data)?;
    write_json(&out.join("pca.json"), &result)?;
    let files = emit_plot_data(&result, &stores.foods, out).map_err(data_err)?;
    log::info!("wrote {} and {}", files.csv.display(), files.svg.display());
    Ok(())
}

fn dense_service(cfg: &RunConfig) -> Result<HttpEmbeddingService, Fail> {
    if cfg.retrieval.embedding.url.is_empty() {
        return Err(Fail::Usage(anyhow!("the dense retriever needs retrieval.embedding.url")));
    }
    Ok(HttpEmbeddingService::new(cfg.retrieval.embedding.clone(), clock()))
}

pub fn index(cfg: &RunConfig) -> Outcome {
    let stores = load_stores(cfg)?;
    let split = load_split(cfg)?;
    let corpus = build_corpus(&stores, &split);
    let index = Bm25Index::build(&corpus, cfg.bm25_params()).map_err(data_err)?;
    index.save(&cfg.paths.index).map_err(data_err)?;
    log::info!("indexed {} train passages -> {}", index.len(), cfg.paths.index.display());
    if cfg.retrieval.retriever == RetrieverKind::Dense {
        let service = dense_service(cfg)?;
        let dense = DenseIndex::build(&service, &corpus, Some(&cfg.retrieval.dense_cache))
            .map_err(|e| Fail::External(e.into()))?;
        log::info!("embedded {} passages -> {}", dense.len(), cfg.retrieval.dense_cache.display());
    }
    Ok(())
}

pub fn collect_evidence(cfg: &RunConfig) -> Outcome {
    let stores = load_stores(cfg)?;
    let split = load_split(cfg)?;
    let frequencies = build_frequency_table(&stores.foods, &split);
    let mut queries = Vec::new();
    for task in [Task::Mfp, Task::Mpc] {
        for inst in instances(cfg, &stores, &split, task)? {
            let selected = match task {
                Task::Mfp => Some(
                    select_starting_points(inst.molecules.iter().map(|m| m.molecule_id), &frequencies, cfg.agent.limit)
                        .map_err(data_err)?,
                ),
                Task::Mpc => None,
            };
            queries.extend(make_queries(&inst, selected.as_ref(), &stores.molecules));
        }
    }
    let client: Box<dyn SearchClient> = match &cfg.evidence.fixture {
        Some(path) => Box::new(FixtureSearchClient::load(path).map_err(data_err)?),
        None => {
            if cfg.evidence.search.url.is_empty() {
                return Err(Fail::Usage(anyhow!("collect-evidence needs evidence.search.url or --fixture")));
            }
            let limiter = RateLimiter::new(cfg.evidence.collect.rate_limit, clock());
            Box::new(HttpSearchClient::new(cfg.evidence.search.clone(), limiter))
        }
    };
    let clock = SystemClock::default();
    let cache =
        collect(&queries, client.as_ref(), &cfg.paths.cache, &cfg.evidence.collect, &clock).map_err(data_err)?;
    let failed = &cache.manifest().failed;
    log::info!("evidence cache: {} records, {} queries failed", cache.len(), failed.len());
    if !failed.is_empty() {
        let (key, why) = failed.iter().next().expect("non-empty");
        return Err(Fail::External(anyhow!(
            "{} evidence queries failed (first: {key:?}: {why}); rerun to retry them",
            failed.len()
        )));
    }
    Ok(())
}

pub fn run(cfg: &RunConfig, dir: &Path, offline: bool) -> Outcome {
    if offline {
        net::deny_outbound();
    }
    let stores = load_stores(cfg)?;
    let split = load_split(cfg)?;
    let instances = instances(cfg, &stores, &split, cfg.task)?;
    if instances.is_empty() {
        return Err(Fail::Data(anyhow!("no {} instances in splits {:?}", cfg.task, cfg.agent.splits)));
    }
    let needs_retriever = cfg.pipeline != Pipeline::ZeroShot;
    let bm25;
    let dense;
    let retriever: Option<&dyn DemoRetriever> = match (needs_retriever, cfg.retrieval.retriever) {
        (false, _) => None,
        (true, RetrieverKind::Bm25) => {
            bm25 = Bm25Index::load(&cfg.paths.index)
                .with_context(|| format!("loading {} (run `index` first)", cfg.paths.index.display()))
                .map_err(Fail::Data)?;
            Some(&bm25)
        }
        (true, RetrieverKind::Dense) => {
            let service = Arc::new(dense_service(cfg)?);
            let index =
                DenseIndex::build(service.as_ref(), &build_corpus(&stores, &split), Some(&cfg.retrieval.dense_cache))
                    .map_err(|e| Fail::External(e.into()))?;
            dense = DenseRetriever { index, service };
            Some(&dense)
        }
    };
    let frequencies = build_frequency_table(&stores.foods, &split);
    let evidence = match cfg.pipeline {
        Pipeline::Agent => Some(
            EvidenceCache::load(&cfg.paths.cache)
                .with_context(|| format!("loading {} (run `collect-evidence` first)", cfg.paths.cache.display()))
                .map_err(Fail::Data)?,
        ),
        _ => None,
    };
    let catalog = match &cfg.paths.prompts {
        Some(p) => PromptCatalog::load_dir(p).map_err(data_err)?,
        None => PromptCatalog::builtin().clone(),
    };
    let backend = cfg.backend.build(&instances, clock()).map_err(llm_err)?;
    let settings = cfg.settings();
    let res = Resources {
        stores: &stores,
        retriever,
        frequencies: Some(&frequencies),
        evidence: evidence.as_ref(),
        catalog: &catalog,
        backend: backend.as_ref(),
        backend_config: &cfg.backend,
        settings: &settings,
    };
    std::fs::create_dir_all(dir).with_context(|| dir.display().to_string()).map_err(Fail::Data)?;
    write_json(&dir.join("config.json"), cfg)?;
    let options = BatchOptions { parallelism: cfg.parallelism, out_dir: Some(dir.to_path_buf()) };
    let results = run_batch(&instances, cfg.pipeline, &res, &options).map_err(data_err)?;
    let count = |s: Status| results.iter().filter(|r| r.status == s).count();
    let network = results.iter().filter(|r| r.network_failure).count();
    println!(
        "{} {} on {}: {} answered, {} abstained, {} failed ({} network) -> {}",
        cfg.task,
        cfg.pipeline,
        cfg.backend.label(),
        count(Status::Answered),
        count(Status::Abstained),
        count(Status::Failed),
        network,
        dir.display()
    );
    if count(Status::Failed) > 0 {
        let msg = anyhow!("{} instances failed; rerun to retry them", count(Status::Failed));
        return Err(if network > 0 { Fail::External(msg) } else { Fail::Data(msg) });
    }
    Ok(())
}

pub fn eval(cfg: &RunConfig, dir: &Path) -> Outcome {
    let stores = load_stores(cfg)?;
    let path = dir.join(RESULTS_FILE);
    let results = read_results(&path)
        .with_context(|| format!("reading {} (run `run` first)", path.display()))
        .map_err(Fail::Data)?;
    let table = match &cfg.eval.synonyms {
        Some(p) => Some(SynonymTable::load(p).map_err(data_err)?),
        None => None,
    };
    let backend = match cfg.eval.judge {
        JudgeMode::Llm => Some(cfg.backend.build(&[], clock()).map_err(llm_err)?),
        JudgeMode::Rule => None,
    };
    let mut options = EvalOptions { max_missing_smiles: cfg.eval.max_missing_smiles, ..EvalOptions::default() };
    if let Some(t) = &table {
        options.synonyms = t;
    }
    options.llm = backend.as_ref().map(|b| LlmJudge {
        backend: b.as_ref(),
        catalog: PromptCatalog::builtin(),
        model_name: cfg.backend.model_name.clone(),
        max_tokens: cfg.backend.max_tokens,
    });
    let report = evaluate(&results, &stores, &options).map_err(data_err)?;
    report.save(&dir.join(EVAL_FILE)).map_err(data_err)?;
    let metric = match report.task {
        Task::Mfp => "accuracy",
        Task::Mpc => "mean F1",
    };
    println!(
        "{} {} on {}: {metric} {} over {} instances ({} excluded)",
        report.task,
        report.pipeline,
        report.backend,
        report.metric(),
        report.instance_count,
        report.excluded.len()
    );
    Ok(())
}

pub fn report(runs: &Path, out: &Path) -> Outcome {
    let entries = std::fs::read_dir(runs).with_context(|| runs.display().to_string()).map_err(Fail::Data)?;
    let mut paths: Vec<_> =
        entries.filter_map(|e| e.ok()).map(|e| e.path().join(EVAL_FILE)).filter(|p| p.is_file()).collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Fail::Data(anyhow!("no */{EVAL_FILE} under {} (run `eval` first)", runs.display())));
    }
    let reports: Vec<EvalReport> =
        paths.iter().map(|p| EvalReport::load(p)).collect::<Result<_, _>>().map_err(data_err)?;
    std::fs::create_dir_all(out).with_context(|| out.display().to_string()).map_err(Fail::Data)?;
    write_reports(&reports, out).map_err(data_err)?;
    print!("{}", render_table(&reports));
    Ok(())
}
