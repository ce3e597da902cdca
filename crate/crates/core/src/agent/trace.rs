use super::grammar::Verdict;
use super::prompt::{self, Bindings};
use super::{Hypothesis, Pipeline};
use crate::dataset::MoleculeId;
use crate::llm::{PromptCatalog, PromptError, Stage, TemplateId};
use crate::retrieval::ScoredPassage;
use crate::task::{Task, TaskInstance};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedEntry {
    pub molecule_id: MoleculeId,
    pub name: String,
    pub count: u64,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceSnippet {
    pub url: String,
    pub title: String,
    pub snippet: String,
}

/// Cached results served for one evidence query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceUse {
    pub query: String,
    pub key: String,
    pub records: Vec<EvidenceSnippet>,
}

/// One request/reply round trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub stage: Stage,
    /// 0 for the first ask, then one per re-ask.
    pub attempt: u32,
    pub system_template: TemplateId,
    /// Template of the first ask; re-asks use the re-ask template.
    pub template: TemplateId,
    pub temperature: f64,
    /// User message sent on this attempt.
    pub prompt: String,
    pub reply: String,
}

/// Everything an instance run used and produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTrace {
    pub instance_id: String,
    pub task: Task,
    pub pipeline: Pipeline,
    pub selected: Vec<SelectedEntry>,
    pub demonstrations: Vec<ScoredPassage>,
    pub evidence: Vec<EvidenceUse>,
    pub profiles: Vec<String>,
    /// Scientist hypotheses after any padding or truncation.
    pub hypotheses: Vec<Hypothesis>,
    /// The Scientist never produced three well-formed hypotheses.
    pub hypotheses_adjusted: bool,
    pub verdict: Option<Verdict>,
    /// Reviewer rejected every hypothesis; the first one was kept.
    pub rejected: bool,
    /// Reviewer never produced a readable verdict; the first one was kept.
    pub reviewer_unparsed: bool,
    pub food_guess: Option<String>,
    pub final_hypothesis: Option<Hypothesis>,
    pub abstention: Option<String>,
    pub error: Option<String>,
    pub exchanges: Vec<Exchange>,
    pub timings_ms: BTreeMap<String, u64>,
}

impl AgentTrace {
    pub fn new(instance: &TaskInstance, pipeline: Pipeline) -> Self {
        Self {
            instance_id: instance.id.clone(),
            task: instance.task,
            pipeline,
            selected: Vec::new(),
            demonstrations: Vec::new(),
            evidence: Vec::new(),
            profiles: Vec::new(),
            hypotheses: Vec::new(),
            hypotheses_adjusted: false,
            verdict: None,
            rejected: false,
            reviewer_unparsed: false,
            food_guess: None,
            final_hypothesis: None,
            abstention: None,
            error: None,
            exchanges: Vec::new(),
            timings_ms: BTreeMap::new(),
        }
    }

    /// Raw reply of the last attempt at `stage`.
    pub fn last_reply(&self, stage: Stage) -> Option<&str> {
        self.exchanges.iter().rev().find(|e| e.stage == stage).map(|e| e.reply.as_str())
    }

    /// First-ask template and bindings for `stage`, rebuilt from the logged components.
    pub fn first_prompt(&self, instance: &TaskInstance, stage: Stage) -> Option<(TemplateId, Bindings)> {
        Some(match stage {
            Stage::ZeroShot => prompt::baseline_prompt(instance, None),
            Stage::Icl => prompt::baseline_prompt(instance, Some(&self.demonstrations)),
            Stage::Scientist => {
                prompt::scientist_prompt(instance, &self.selected, &self.profiles, &self.evidence, &self.demonstrations)
            }
            Stage::Reviewer => prompt::reviewer_prompt(instance, &self.demonstrations, &self.hypotheses),
            Stage::Judge => return None,
        })
    }
}

/// Re-render every logged prompt from the trace components and compare it
/// with what was sent. Returns the first mismatch.
pub fn replay(trace: &AgentTrace, instance: &TaskInstance, catalog: &PromptCatalog) -> Result<usize, String> {
    let mut previous: Option<&Exchange> = None;
    for (i, ex) in trace.exchanges.iter().enumerate() {
        let expected = if ex.attempt == 0 {
            let (id, bindings) = trace
                .first_prompt(instance, ex.stage)
                .ok_or_else(|| format!("exchange {i}: unexpected stage {}", ex.stage))?;
            if id != ex.template {
                return Err(format!("exchange {i}: template {id:?} differs from logged {:?}", ex.template));
            }
            catalog.render(id, &bindings).map_err(|e| e.to_string())?
        } else {
            let prev = previous
                .filter(|p| p.stage == ex.stage && p.attempt + 1 == ex.attempt)
                .ok_or_else(|| format!("exchange {i}: re-ask without a preceding attempt"))?;
            let problem = match prompt::parse_reply(instance, ex.stage, &prev.reply) {
                Err(p) => p,
                Ok(_) => return Err(format!("exchange {i}: re-ask after a reply that parses")),
            };
            reask_prompt(catalog, instance, ex.stage, &problem.to_string()).map_err(|e| e.to_string())?
        };
        if expected != ex.prompt {
            return Err(format!("exchange {i} ({} attempt {}): prompt differs", ex.stage, ex.attempt));
        }
        if ex.system_template != prompt::system_template(instance.task, ex.stage) {
            return Err(format!("exchange {i}: unexpected system prompt {:?}", ex.system_template));
        }
        previous = Some(ex);
    }
    Ok(trace.exchanges.len())
}

pub(crate) fn reask_prompt(
    catalog: &PromptCatalog,
    instance: &TaskInstance,
    stage: Stage,
    problem: &str,
) -> Result<String, PromptError> {
    let bindings: Bindings =
        [("problem", problem.to_string()), ("instruction", prompt::instruction(instance, stage))].into();
    catalog.render(TemplateId::Reask, &bindings)
}
