//! Prompt assembly. Everything here is a pure function of trace components,
//! so a trace can rebuild the exact prompts that were sent.

use super::grammar::{
    parse_category, parse_hypotheses, parse_molecules, parse_verdict, split_molecules, ParseProblem, RawHypothesis,
    Verdict,
};
use super::trace::{EvidenceUse, SelectedEntry};
use super::{Answer, Hypothesis};
use crate::category::Category;
use crate::dataset::MoleculeRecord;
use crate::llm::{Stage, TemplateId};
use crate::retrieval::ScoredPassage;
use crate::task::{Task, TaskInstance};
use std::collections::BTreeMap;

pub type Bindings = BTreeMap<&'static str, String>;

/// Separator for molecule lists in prompts; names may contain commas.
pub const LIST_SEPARATOR: &str = "; ";

pub fn molecule_list(names: &[String]) -> String {
    names.join(LIST_SEPARATOR)
}

pub fn demonstrations_block(demos: &[ScoredPassage]) -> String {
    if demos.is_empty() {
        return "(no demonstrations available)".into();
    }
    demos.iter().enumerate().map(|(i, d)| format!("{}. {}", i + 1, d.text)).collect::<Vec<_>>().join("\n")
}

pub fn evidence_block(evidence: &[EvidenceUse]) -> String {
    if evidence.is_empty() {
        return "(no queries)".into();
    }
    let mut out = Vec::new();
    for (i, e) in evidence.iter().enumerate() {
        out.push(format!("[Q{}] {}", i + 1, e.query));
        if e.records.is_empty() {
            out.push("  (no cached results)".into());
        }
        for (j, r) in e.records.iter().enumerate() {
            out.push(format!("  ({}) {} <{}>", j + 1, r.title, r.url));
            out.push(format!("      {}", r.snippet.replace('\n', " ")));
        }
    }
    out.join("\n")
}

/// One line per molecule from its store record.
pub fn molecule_profile(m: &MoleculeRecord) -> String {
    let mut parts = vec![format!("SMILES {}", m.smiles.as_deref().unwrap_or("unknown"))];
    if !m.descriptors.is_empty() {
        parts.push(format!("flavor descriptors: {}", m.descriptors.join(", ")));
    }
    if !m.properties.is_empty() {
        let props: Vec<String> = m.properties.iter().map(|(k, v)| format!("{k}={v}")).collect();
        parts.push(format!("properties: {}", props.join(", ")));
    }
    format!("- {}: {}", m.name, parts.join("; "))
}

pub fn profiles_block(profiles: &[String]) -> String {
    if profiles.is_empty() {
        "(no reference profiles)".into()
    } else {
        profiles.join("\n")
    }
}

pub fn selected_block(selected: &[SelectedEntry]) -> String {
    if selected.is_empty() {
        return "(none)".into();
    }
    selected
        .iter()
        .map(|s| format!("{} (entropy {:.3} bits, in {} reference foods)", s.name, s.entropy, s.count))
        .collect::<Vec<_>>()
        .join(LIST_SEPARATOR)
}

pub fn answer_text(answer: &Answer) -> String {
    match answer {
        Answer::Category(c) => c.clone(),
        Answer::Molecules(m) => molecule_list(m),
    }
}

pub fn hypotheses_block(hypotheses: &[Hypothesis]) -> String {
    hypotheses
        .iter()
        .enumerate()
        .map(|(i, h)| format!("HYPOTHESIS {}: {}\nRATIONALE: {}", i + 1, answer_text(&h.answer), h.rationale))
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn base(instance: &TaskInstance) -> Bindings {
    let mut b = Bindings::new();
    b.insert("molecules", molecule_list(&instance.molecule_names()));
    match instance.task {
        Task::Mfp => {
            b.insert("categories", Category::label_list());
        }
        Task::Mpc => {
            b.insert("food", instance.food_name.clone());
            b.insert("n", instance.missing_count().to_string());
        }
    }
    b
}

pub fn baseline_prompt(instance: &TaskInstance, demos: Option<&[ScoredPassage]>) -> (TemplateId, Bindings) {
    let mut b = base(instance);
    let id = match (instance.task, demos) {
        (Task::Mfp, None) => TemplateId::MfpZeroShot,
        (Task::Mpc, None) => TemplateId::MpcZeroShot,
        (Task::Mfp, Some(_)) => TemplateId::MfpIcl,
        (Task::Mpc, Some(_)) => TemplateId::MpcIcl,
    };
    if let Some(d) = demos {
        b.insert("demonstrations", demonstrations_block(d));
    }
    (id, b)
}

pub fn scientist_prompt(
    instance: &TaskInstance,
    selected: &[SelectedEntry],
    profiles: &[String],
    evidence: &[EvidenceUse],
    demos: &[ScoredPassage],
) -> (TemplateId, Bindings) {
    let mut b = base(instance);
    b.insert("profiles", profiles_block(profiles));
    b.insert("evidence", evidence_block(evidence));
    b.insert("demonstrations", demonstrations_block(demos));
    let id = match instance.task {
        Task::Mfp => {
            b.insert("selected", selected_block(selected));
            TemplateId::MfpScientist
        }
        Task::Mpc => TemplateId::MpcScientist,
    };
    (id, b)
}

pub fn reviewer_prompt(
    instance: &TaskInstance,
    demos: &[ScoredPassage],
    hypotheses: &[Hypothesis],
) -> (TemplateId, Bindings) {
    let mut b = base(instance);
    b.insert("demonstrations", demonstrations_block(demos));
    b.insert("hypotheses", hypotheses_block(hypotheses));
    let id = match instance.task {
        Task::Mfp => TemplateId::MfpReviewer,
        Task::Mpc => TemplateId::MpcReviewer,
    };
    (id, b)
}

pub fn system_template(task: Task, stage: Stage) -> TemplateId {
    match (stage, task) {
        (Stage::Scientist | Stage::Reviewer, Task::Mfp) => TemplateId::MfpSystem,
        (Stage::Scientist | Stage::Reviewer, Task::Mpc) => TemplateId::MpcSystem,
        (Stage::Judge, _) => TemplateId::JudgeSystem,
        _ => TemplateId::SystemBaseline,
    }
}

/// Format reminder sent with a re-ask.
pub fn instruction(instance: &TaskInstance, stage: Stage) -> String {
    match (stage, instance.task) {
        (Stage::Scientist, Task::Mfp) => {
            "Give exactly three hypotheses, each as a line \"HYPOTHESIS <i>: <category>\" followed by a line \"RATIONALE: <reasoning>\".".into()
        }
        (Stage::Scientist, Task::Mpc) => format!(
            "Give exactly three hypotheses, each as a line \"HYPOTHESIS <i>: <molecule>; <molecule>; ...\" naming exactly {} molecules, followed by a line \"RATIONALE: <reasoning>\".",
            instance.missing_count()
        ),
        (Stage::Reviewer, _) => "End with one line \"VERDICT: SELECT <1, 2 or 3>\" or \"VERDICT: REJECT\".".into(),
        (_, Task::Mfp) => "Reply with one line of the form \"ANSWER: <category>\".".into(),
        (_, Task::Mpc) => format!(
            "Reply with one line of the form \"MOLECULES: <molecule 1>; <molecule 2>; ...\" naming exactly {} molecules.",
            instance.missing_count()
        ),
    }
}

/// A parsed reply for one stage.
#[derive(Debug, Clone, PartialEq)]
pub enum Parsed {
    Answer { answer: Answer, food: Option<String> },
    Hypotheses(Vec<RawHypothesis>),
    Verdict(Verdict),
}

fn hypothesis_problem(instance: &TaskInstance, h: &RawHypothesis) -> Option<ParseProblem> {
    match instance.task {
        Task::Mfp if h.answer.is_empty() => Some(ParseProblem::EmptyAnswer("HYPOTHESIS")),
        Task::Mfp => None,
        Task::Mpc => {
            let got = split_molecules(&h.answer).len();
            (got != instance.missing_count())
                .then_some(ParseProblem::WrongCount { expected: instance.missing_count(), got })
        }
    }
}

/// Hypotheses from a Scientist reply that satisfy the answer format.
pub fn valid_hypotheses(instance: &TaskInstance, text: &str) -> Vec<RawHypothesis> {
    parse_hypotheses(text).into_iter().filter(|h| hypothesis_problem(instance, h).is_none()).collect()
}

/// Parse a reply under the grammar of `stage`.
pub fn parse_reply(instance: &TaskInstance, stage: Stage, text: &str) -> Result<Parsed, ParseProblem> {
    match stage {
        Stage::ZeroShot | Stage::Icl | Stage::Judge => match instance.task {
            Task::Mfp => {
                let (answer, food) = parse_category(text)?;
                Ok(Parsed::Answer { answer: Answer::Category(answer), food })
            }
            Task::Mpc => Ok(Parsed::Answer {
                answer: Answer::Molecules(parse_molecules(text, instance.missing_count())?),
                food: None,
            }),
        },
        Stage::Scientist => {
            let hs = parse_hypotheses(text);
            if hs.len() != 3 {
                return Err(ParseProblem::HypothesisCount { got: hs.len() });
            }
            for (i, h) in hs.iter().enumerate() {
                if let Some(p) = hypothesis_problem(instance, h) {
                    return Err(ParseProblem::InvalidHypothesis { index: i + 1, problem: Box::new(p) });
                }
            }
            Ok(Parsed::Hypotheses(hs))
        }
        Stage::Reviewer => parse_verdict(text, 3).map(Parsed::Verdict),
    }
}
