use super::grammar::{split_molecules, ParseProblem, RawHypothesis, Verdict};
use super::prompt::{self, Bindings, Parsed};
use super::trace::{reask_prompt, AgentTrace, EvidenceSnippet, EvidenceUse, Exchange, SelectedEntry};
use super::{Answer, Hypothesis, HypothesisSource, Outcome, Pipeline};
use crate::analysis::{select_starting_points, MoleculeFrequencyTable};
use crate::dataset::Stores;
use crate::evidence::{make_queries, EvidenceCache};
use crate::llm::{
    BackendConfig, ChatBackend, ChatMessage, ChatRequest, LlmError, PromptCatalog, PromptError, RequestContext, Stage,
    TemplateId,
};
use crate::retrieval::{mfp_query, mpc_query, DemoRetriever, DenseError, ScoredPassage, DEFAULT_K};
use crate::task::{Task, TaskInstance};
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineSettings {
    /// Demonstrations per prompt.
    pub k: usize,
    /// Starting-point cap; never more than 10.
    pub limit: usize,
    /// Cached evidence results per query placed in a prompt.
    pub prompt_results: usize,
    pub max_reasks: u32,
    /// MPC reference profiles listed in the Scientist prompt.
    pub max_profiles: usize,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self { k: DEFAULT_K, limit: 10, prompt_results: 3, max_reasks: 2, max_profiles: 10 }
    }
}

/// Read-only inputs shared by every instance of a batch.
#[derive(Clone, Copy)]
pub struct Resources<'a> {
    pub stores: &'a Stores,
    pub retriever: Option<&'a dyn DemoRetriever>,
    pub frequencies: Option<&'a MoleculeFrequencyTable>,
    pub evidence: Option<&'a EvidenceCache>,
    pub catalog: &'a PromptCatalog,
    pub backend: &'a dyn ChatBackend,
    pub backend_config: &'a BackendConfig,
    pub settings: &'a PipelineSettings,
}

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("retrieval failed: {0}")]
    Retrieval(#[from] DenseError),
    #[error("the {0} is required by this pipeline but was not provided")]
    MissingResource(&'static str),
    #[error("starting-point selection failed: {0}")]
    Selection(String),
}

impl AgentError {
    pub fn is_network(&self) -> bool {
        match self {
            AgentError::Llm(e) => e.is_network(),
            AgentError::Retrieval(DenseError::Service(_)) => true,
            _ => false,
        }
    }
}

/// Ask, parse, and re-ask up to `max_reasks` times. Every round trip is
/// logged. The inner result is the last parse outcome.
fn converse(
    res: &Resources<'_>,
    trace: &mut AgentTrace,
    instance: &TaskInstance,
    stage: Stage,
    template: TemplateId,
    bindings: &Bindings,
) -> Result<(Result<Parsed, ParseProblem>, String), AgentError> {
    let system_template = prompt::system_template(instance.task, stage);
    let system = res.catalog.render(system_template, &Bindings::new())?;
    let first = res.catalog.render(template, bindings)?;
    let temperature = res.backend_config.temperature_for(stage);
    let mut messages = vec![ChatMessage::system(system), ChatMessage::user(first.clone())];
    let mut user = first;
    let base = RequestContext::new(&instance.id, stage);
    let started = Instant::now();
    let mut attempt = 0;
    loop {
        let request = ChatRequest {
            messages: messages.clone(),
            temperature,
            max_tokens: res.backend_config.max_tokens,
            model_name: res.backend_config.model_name.clone(),
        };
        let response = res.backend.complete(&base.reask(attempt), &request)?;
        trace.exchanges.push(Exchange {
            stage,
            attempt,
            system_template,
            template,
            temperature,
            prompt: user.clone(),
            reply: response.text.clone(),
        });
        let parsed = prompt::parse_reply(instance, stage, &response.text);
        match parsed {
            Err(problem) if attempt < res.settings.max_reasks => {
                log::debug!("{} {stage}: {problem}; re-asking", instance.id);
                user = reask_prompt(res.catalog, instance, stage, &problem.to_string())?;
                messages.push(ChatMessage::assistant(response.text));
                messages.push(ChatMessage::user(user.clone()));
                attempt += 1;
            }
            other => {
                *trace.timings_ms.entry(stage.as_str().to_string()).or_default() +=
                    started.elapsed().as_millis() as u64;
                return Ok((other, response.text));
            }
        }
    }
}

fn baseline(
    instance: &TaskInstance,
    res: &Resources<'_>,
    trace: &mut AgentTrace,
    demos: Option<Vec<ScoredPassage>>,
) -> Result<Outcome, AgentError> {
    let stage = if demos.is_some() { Stage::Icl } else { Stage::ZeroShot };
    if let Some(d) = demos {
        trace.demonstrations = d;
    }
    let (template, bindings) = trace.first_prompt(instance, stage).expect("baseline stages have prompts");
    let (parsed, reply) = converse(res, trace, instance, stage, template, &bindings)?;
    Ok(match parsed {
        Ok(Parsed::Answer { answer, food }) => {
            trace.food_guess = food;
            let h = Hypothesis { answer, rationale: reply.trim().to_string(), source: HypothesisSource::Baseline };
            trace.final_hypothesis = Some(h.clone());
            Outcome::Answered(h)
        }
        Ok(other) => unreachable!("baseline grammar produced {other:?}"),
        Err(problem) => abstain(trace, res, problem),
    })
}

fn abstain(trace: &mut AgentTrace, res: &Resources<'_>, problem: ParseProblem) -> Outcome {
    let reason = format!("unparseable after {} re-asks: {problem}", res.settings.max_reasks);
    trace.abstention = Some(reason.clone());
    Outcome::Abstained(reason)
}

/// Top-k train demonstrations, never including the instance's own food.
fn demonstrations(instance: &TaskInstance, res: &Resources<'_>, k: usize) -> Result<Vec<ScoredPassage>, AgentError> {
    let retriever = res.retriever.ok_or(AgentError::MissingResource("demonstration index"))?;
    let query = match instance.task {
        Task::Mfp => mfp_query(&instance.molecule_names()),
        Task::Mpc => mpc_query(&instance.food_name, &instance.molecule_names()),
    };
    let mut demos = retriever.top_k(&query, k + 1)?;
    let before = demos.len();
    demos.retain(|d| d.food_id != instance.food_id);
    if demos.len() < before {
        log::warn!("{}: dropped the instance's own food from its demonstrations", instance.id);
    }
    demos.truncate(k);
    if demos.len() < k {
        log::warn!("{}: only {} of {k} demonstrations available", instance.id, demos.len());
    }
    Ok(demos)
}

fn run_traced(
    instance: &TaskInstance,
    pipeline: Pipeline,
    body: impl FnOnce(&mut AgentTrace) -> Result<Outcome, AgentError>,
) -> (Outcome, AgentTrace) {
    let mut trace = AgentTrace::new(instance, pipeline);
    let started = Instant::now();
    let outcome = body(&mut trace).unwrap_or_else(|e| {
        log::warn!("{}: {e}", instance.id);
        trace.error = Some(e.to_string());
        Outcome::Failed { message: e.to_string(), network: e.is_network() }
    });
    trace.timings_ms.insert("total".into(), started.elapsed().as_millis() as u64);
    (outcome, trace)
}

pub fn run_zero_shot(instance: &TaskInstance, res: &Resources<'_>) -> (Outcome, AgentTrace) {
    run_traced(instance, Pipeline::ZeroShot, |trace| baseline(instance, res, trace, None))
}

pub fn run_icl(instance: &TaskInstance, res: &Resources<'_>) -> (Outcome, AgentTrace) {
    run_traced(instance, Pipeline::Icl, |trace| {
        let demos = demonstrations(instance, res, res.settings.k)?;
        baseline(instance, res, trace, Some(demos))
    })
}

pub fn run_agent(instance: &TaskInstance, res: &Resources<'_>) -> (Outcome, AgentTrace) {
    run_traced(instance, Pipeline::Agent, |trace| agent(instance, res, trace))
}

pub fn run_instance(instance: &TaskInstance, pipeline: Pipeline, res: &Resources<'_>) -> (Outcome, AgentTrace) {
    match pipeline {
        Pipeline::ZeroShot => run_zero_shot(instance, res),
        Pipeline::Icl => run_icl(instance, res),
        Pipeline::Agent => run_agent(instance, res),
    }
}

fn to_answer(task: Task, raw: &RawHypothesis) -> Answer {
    match task {
        Task::Mfp => Answer::Category(raw.answer.clone()),
        Task::Mpc => Answer::Molecules(split_molecules(&raw.answer)),
    }
}

fn agent(instance: &TaskInstance, res: &Resources<'_>, trace: &mut AgentTrace) -> Result<Outcome, AgentError> {
    let cache = res.evidence.ok_or(AgentError::MissingResource("evidence cache"))?;
    let started = Instant::now();
    let molecules = &res.stores.molecules;

    // Starting points (MFP only).
    let selected = match instance.task {
        Task::Mfp => {
            let freq = res.frequencies.ok_or(AgentError::MissingResource("molecule frequency table"))?;
            let ids = instance.molecules.iter().map(|m| m.molecule_id);
            let picked = select_starting_points(ids, freq, res.settings.limit)
                .map_err(|e| AgentError::Selection(e.to_string()))?;
            trace.selected = picked
                .molecules
                .iter()
                .map(|s| SelectedEntry {
                    molecule_id: s.molecule_id,
                    name: molecules.name_of(s.molecule_id).unwrap_or("unknown").to_string(),
                    count: s.count,
                    entropy: s.entropy,
                })
                .collect();
            Some(picked)
        }
        Task::Mpc => None,
    };

    // Evidence: store profiles, cached snippets, demonstrations.
    trace.profiles = match instance.task {
        Task::Mfp => {
            trace.selected.iter().filter_map(|s| molecules.get(s.molecule_id)).map(prompt::molecule_profile).collect()
        }
        Task::Mpc => instance
            .molecules
            .iter()
            .filter_map(|m| molecules.get(m.molecule_id))
            .take(res.settings.max_profiles)
            .map(prompt::molecule_profile)
            .collect(),
    };
    trace.evidence = make_queries(instance, selected.as_ref(), molecules)
        .into_iter()
        .map(|q| EvidenceUse {
            records: cache
                .lookup(&q.text, res.settings.prompt_results)
                .iter()
                .map(|r| EvidenceSnippet { url: r.url.clone(), title: r.title.clone(), snippet: r.snippet.clone() })
                .collect(),
            key: q.key(),
            query: q.text,
        })
        .collect();
    trace.demonstrations = demonstrations(instance, res, res.settings.k)?;
    trace.timings_ms.insert("evidence".into(), started.elapsed().as_millis() as u64);

    // Scientist.
    let (template, bindings) = trace.first_prompt(instance, Stage::Scientist).expect("scientist prompt");
    let (parsed, reply) = converse(res, trace, instance, Stage::Scientist, template, &bindings)?;
    let raw = match parsed {
        Ok(Parsed::Hypotheses(h)) => h,
        Ok(other) => unreachable!("scientist grammar produced {other:?}"),
        Err(problem) => {
            let mut salvaged = prompt::valid_hypotheses(instance, &reply);
            if salvaged.is_empty() {
                return Ok(abstain(trace, res, problem));
            }
            log::warn!("{}: scientist gave {} usable hypotheses; adjusting to 3", instance.id, salvaged.len());
            trace.hypotheses_adjusted = true;
            salvaged.truncate(3);
            while salvaged.len() < 3 {
                salvaged.push(salvaged.last().expect("non-empty").clone());
            }
            salvaged
        }
    };
    trace.hypotheses = raw
        .iter()
        .enumerate()
        .map(|(i, h)| Hypothesis {
            answer: to_answer(instance.task, h),
            rationale: h.rationale.clone(),
            source: HypothesisSource::Scientist(i + 1),
        })
        .collect();

    // Reviewer.
    let (template, bindings) = trace.first_prompt(instance, Stage::Reviewer).expect("reviewer prompt");
    let (parsed, _) = converse(res, trace, instance, Stage::Reviewer, template, &bindings)?;
    let pick = match parsed {
        Ok(Parsed::Verdict(v)) => {
            trace.verdict = Some(v);
            match v {
                Verdict::Select(k) => k,
                Verdict::Reject => {
                    trace.rejected = true;
                    1
                }
            }
        }
        Ok(other) => unreachable!("reviewer grammar produced {other:?}"),
        Err(problem) => {
            log::warn!("{}: no reviewer verdict ({problem}); keeping hypothesis 1", instance.id);
            trace.reviewer_unparsed = true;
            1
        }
    };
    let chosen = trace.hypotheses[pick - 1].clone();
    trace.final_hypothesis = Some(chosen.clone());
    Ok(Outcome::Answered(chosen))
}
