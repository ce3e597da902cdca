use flavorbench_core::agent::{Pipeline, PipelineSettings};
use flavorbench_core::dataset::fetch::FetchConfig;
use flavorbench_core::dataset::SplitTag;
use flavorbench_core::eval::{JudgeMode, DEFAULT_MAX_MISSING_SMILES};
use flavorbench_core::evidence::{EvidenceConfig, SearchApiConfig};
use flavorbench_core::llm::BackendConfig;
use flavorbench_core::retrieval::{Bm25Params, EmbeddingConfig, DEFAULT_K};
use flavorbench_core::task::{Task, DEFAULT_HOLDOUT};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Everything a workflow step can be configured with. Every field has a
/// default, so `{}` is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub paths: Paths,
    pub task: Task,
    pub pipeline: Pipeline,
    pub backend: BackendConfig,
    pub retrieval: RetrievalConfig,
    pub agent: AgentConfig,
    pub evidence: EvidenceSection,
    pub fetch: FetchConfig,
    pub eval: EvalConfig,
    /// Worker threads for run and collect-evidence.
    pub parallelism: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            paths: Paths::default(),
            task: Task::Mfp,
            pipeline: Pipeline::Agent,
            backend: BackendConfig::default(),
            retrieval: RetrievalConfig::default(),
            agent: AgentConfig::default(),
            evidence: EvidenceSection::default(),
            fetch: FetchConfig::default(),
            eval: EvalConfig::default(),
            parallelism: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    /// Raw export: molecules/foods/associations JSONL.
    pub export: PathBuf,
    /// Validated stores written by `ingest`.
    pub data: PathBuf,
    pub split: PathBuf,
    pub index: PathBuf,
    /// Evidence cache directory.
    pub cache: PathBuf,
    /// Run directories are created under this one.
    pub out: PathBuf,
    /// Directory of prompt overrides (`{template}.txt`).
    pub prompts: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            export: "data/export".into(),
            data: "data/stores".into(),
            split: "data/split.json".into(),
            index: "data/bm25.json".into(),
            cache: "data/evidence".into(),
            out: "runs".into(),
            prompts: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RetrieverKind {
    Bm25,
    Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetrievalConfig {
    pub retriever: RetrieverKind,
    pub k: usize,
    pub k1: f64,
    pub b: f64,
    pub embedding: EmbeddingConfig,
    /// Embedding cache file for the dense retriever.
    pub dense_cache: PathBuf,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        let p = Bm25Params::default();
        Self {
            retriever: RetrieverKind::Bm25,
            k: DEFAULT_K,
            k1: p.k1,
            b: p.b,
            embedding: EmbeddingConfig::default(),
            dense_cache: "data/dense.json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentConfig {
    /// Starting-point cap (at most 10).
    pub limit: usize,
    pub holdout_fraction: f64,
    pub split_seed: u64,
    /// Seed for choosing MPC held-out molecules.
    pub instance_seed: u64,
    /// Splits whose foods become instances.
    pub splits: Vec<SplitTag>,
    pub max_reasks: u32,
    pub max_profiles: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        let s = PipelineSettings::default();
        Self {
            limit: s.limit,
            holdout_fraction: DEFAULT_HOLDOUT,
            split_seed: 42,
            instance_seed: 42,
            splits: vec![SplitTag::Test],
            max_reasks: s.max_reasks,
            max_profiles: s.max_profiles,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct EvidenceSection {
    pub collect: EvidenceConfig,
    pub search: SearchApiConfig,
    /// Offline search fixture used instead of the search API.
    pub fixture: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub judge: JudgeMode,
    pub max_missing_smiles: f64,
    /// Replacement synonym table for the rule judge.
    pub synonyms: Option<PathBuf>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { judge: JudgeMode::Rule, max_missing_smiles: DEFAULT_MAX_MISSING_SMILES, synonyms: None }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: key `{key}`: {message}")]
    Parse { path: String, key: String, message: String },
    #[error("config key `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            ConfigError::Parse { path: origin.into(), key, message: e.into_inner().to_string() }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key, message: &str| Err(ConfigError::Invalid { key, message: message.into() });
        if !(self.agent.holdout_fraction > 0.0 && self.agent.holdout_fraction < 1.0) {
            return invalid("agent.holdout_fraction", "expected a number strictly between 0 and 1");
        }
        if self.agent.limit == 0 || self.agent.limit > 10 {
            return invalid("agent.limit", "expected an integer from 1 to 10");
        }
        if self.agent.splits.is_empty() {
            return invalid("agent.splits", "expected at least one of train, dev, test");
        }
        if self.retrieval.k == 0 {
            return invalid("retrieval.k", "expected a positive integer");
        }
        if !(self.retrieval.k1 >= 0.0 && (0.0..=1.0).contains(&self.retrieval.b)) {
            return invalid("retrieval", "expected k1 >= 0 and b in [0, 1]");
        }
        if self.parallelism == 0 {
            return invalid("parallelism", "expected a positive integer");
        }
        if !(0.0..=1.0).contains(&self.eval.max_missing_smiles) {
            return invalid("eval.max_missing_smiles", "expected a fraction in [0, 1]");
        }
        Ok(())
    }

    pub fn settings(&self) -> PipelineSettings {
        PipelineSettings {
            k: self.retrieval.k,
            limit: self.agent.limit,
            prompt_results: self.evidence.collect.prompt_results,
            max_reasks: self.agent.max_reasks,
            max_profiles: self.agent.max_profiles,
        }
    }

    pub fn bm25_params(&self) -> Bm25Params {
        Bm25Params { k1: self.retrieval.k1, b: self.retrieval.b }
    }

    /// `{out}/{task}-{pipeline}-{backend kind}`.
    pub fn run_dir(&self) -> PathBuf {
        let kind = serde_json::to_value(self.backend.kind).ok().and_then(|v| v.as_str().map(str::to_string));
        self.paths.out.join(format!("{}-{}-{}", self.task, self.pipeline, kind.unwrap_or_else(|| "backend".into())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        assert_eq!(RunConfig::parse("{}", "t").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_name_their_path() {
        let err = RunConfig::parse(r#"{"agent": {"limt": 3}}"#, "t").unwrap_err().to_string();
        assert!(err.contains("agent.limt"), "{err}");
        let err = RunConfig::parse(r#"{"retrieval": {"k": "three"}}"#, "t").unwrap_err().to_string();
        assert!(err.contains("retrieval.k") && err.contains("expected usize"), "{err}");
    }

    #[test]
    fn validation_names_the_key() {
        let err = RunConfig::parse(r#"{"agent": {"limit": 11}}"#, "t").unwrap_err().to_string();
        assert!(err.contains("agent.limit"), "{err}");
    }

    #[test]
    fn defaults_round_trip() {
        let text = serde_json::to_string(&RunConfig::default()).unwrap();
        assert_eq!(RunConfig::parse(&text, "t").unwrap(), RunConfig::default());
    }
}
