//! The three inference pipelines: zero-shot, in-context learning, and the
//! Scientist/Reviewer agent.
//!
//! Every reply must follow a line grammar (`ANSWER:`, `MOLECULES:`,
//! `HYPOTHESIS i:`, `VERDICT:`). A reply that does not parse is re-asked up
//! to twice; after that the instance is an abstention.

mod batch;
mod grammar;
mod pipeline;
mod prompt;
mod trace;

pub use batch::{
    read_results, run_batch, BatchError, BatchOptions, InstanceResult, Status, JOURNAL_FILE, RESULTS_FILE, TRACE_DIR,
};
pub(crate) use grammar::strip_marker;
pub use grammar::{
    parse_category, parse_hypotheses, parse_molecules, parse_verdict, split_molecules, ParseProblem, RawHypothesis,
    Verdict,
};
pub use pipeline::{run_agent, run_icl, run_instance, run_zero_shot, AgentError, PipelineSettings, Resources};
pub use prompt::{
    demonstrations_block, evidence_block, hypotheses_block, molecule_list, molecule_profile, parse_reply, Parsed,
};
pub use trace::{replay, AgentTrace, EvidenceSnippet, EvidenceUse, Exchange, SelectedEntry};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    #[serde(alias = "zero-shot")]
    ZeroShot,
    Icl,
    Agent,
}

impl Pipeline {
    pub const ALL: [Pipeline; 3] = [Pipeline::ZeroShot, Pipeline::Icl, Pipeline::Agent];

    pub fn as_str(self) -> &'static str {
        match self {
            Pipeline::ZeroShot => "zero_shot",
            Pipeline::Icl => "icl",
            Pipeline::Agent => "agent",
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pipeline {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "zero_shot" | "zeroshot" => Ok(Pipeline::ZeroShot),
            "icl" => Ok(Pipeline::Icl),
            "agent" => Ok(Pipeline::Agent),
            other => Err(format!("unknown pipeline {other:?} (expected zero_shot, icl or agent)")),
        }
    }
}

/// A category label (MFP) or molecule names (MPC).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Answer {
    Category(String),
    Molecules(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisSource {
    Baseline,
    /// 1-based Scientist hypothesis number.
    Scientist(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub answer: Answer,
    pub rationale: String,
    pub source: HypothesisSource,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Answered(Hypothesis),
    /// No parseable answer; scored as incorrect.
    Abstained(String),
    /// The backend or a resource failed.
    Failed {
        message: String,
        network: bool,
    },
}
