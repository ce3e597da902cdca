use crate::agent::strip_marker;
use crate::category::{normalize_label, Category};
use crate::llm::{ChatBackend, ChatMessage, ChatRequest, PromptCatalog, RequestContext, Stage, TemplateId};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JudgeMode {
    #[default]
    Rule,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub instance_id: String,
    pub predicted: String,
    pub gold: String,
    pub equivalent: bool,
    /// The judge that produced the verdict.
    pub judge: JudgeMode,
    pub rationale: String,
    /// Set when the LLM judge failed and the rule judge stood in.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degraded: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum SynonymError {
    #[error("cannot read synonym table {path}: {message}")]
    Io { path: String, message: String },
    #[error("synonym table {path}: {message}")]
    Parse { path: String, message: String },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SynonymFile {
    version: u32,
    synonyms: BTreeMap<String, Category>,
}

/// Aliases that map free-text labels onto the category table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynonymTable {
    pub version: u32,
    aliases: BTreeMap<String, Category>,
}

impl SynonymTable {
    pub fn builtin() -> &'static SynonymTable {
        static TABLE: OnceLock<SynonymTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            SynonymTable::parse(include_str!("../../data/category_synonyms.json"), "builtin")
                .expect("builtin synonym table parses")
        })
    }

    pub fn load(path: &Path) -> Result<SynonymTable, SynonymError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SynonymError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::parse(&text, &path.display().to_string())
    }

    fn parse(text: &str, origin: &str) -> Result<SynonymTable, SynonymError> {
        let file: SynonymFile = serde_json::from_str(text)
            .map_err(|e| SynonymError::Parse { path: origin.into(), message: e.to_string() })?;
        let aliases = file.synonyms.into_iter().map(|(k, v)| (normalize_label(&k), v)).collect();
        Ok(SynonymTable { version: file.version, aliases })
    }

    pub fn len(&self) -> usize {
        self.aliases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aliases.is_empty()
    }

    /// The category a label denotes, directly or through an alias.
    pub fn resolve(&self, label: &str) -> Option<Category> {
        Category::parse_label(label).or_else(|| self.aliases.get(&normalize_label(label)).copied())
    }
}

/// Rule judge: equal after normalization, or both resolve to the same category.
pub fn rule_equivalent(predicted: &str, gold: &str, table: &SynonymTable) -> (bool, String) {
    let (p, g) = (normalize_label(predicted), normalize_label(gold));
    if p.is_empty() || g.is_empty() {
        return (false, "empty label".into());
    }
    if p == g {
        return (true, format!("normalized forms match ({p:?})"));
    }
    match (table.resolve(predicted), table.resolve(gold)) {
        (Some(a), Some(b)) if a == b => (true, format!("both resolve to {a}")),
        (Some(a), Some(b)) => (false, format!("{a} differs from {b}")),
        _ => (false, format!("{p:?} and {g:?} share no normalized form or synonym")),
    }
}

/// Settings for the opt-in LLM judge.
pub struct LlmJudge<'a> {
    pub backend: &'a dyn ChatBackend,
    pub catalog: &'a PromptCatalog,
    pub model_name: String,
    pub max_tokens: u32,
}

pub fn judge_category(
    instance_id: &str,
    predicted: &str,
    gold: &str,
    llm: Option<&LlmJudge<'_>>,
    table: &SynonymTable,
) -> JudgeVerdict {
    let mut verdict = JudgeVerdict {
        instance_id: instance_id.into(),
        predicted: predicted.into(),
        gold: gold.into(),
        equivalent: false,
        judge: JudgeMode::Rule,
        rationale: String::new(),
        degraded: false,
    };
    if let Some(judge) = llm {
        match ask_llm(instance_id, predicted, gold, judge) {
            Ok((equivalent, text)) => {
                verdict.equivalent = equivalent;
                verdict.judge = JudgeMode::Llm;
                verdict.rationale = text;
                return verdict;
            }
            Err(e) => {
                log::warn!("{instance_id}: LLM judge failed ({e}); using the rule judge");
                verdict.degraded = true;
            }
        }
    }
    let (equivalent, rationale) = rule_equivalent(predicted, gold, table);
    verdict.equivalent = equivalent;
    verdict.rationale = rationale;
    verdict
}

fn ask_llm(instance_id: &str, predicted: &str, gold: &str, judge: &LlmJudge<'_>) -> Result<(bool, String), String> {
    let bindings: BTreeMap<&str, String> = [("predicted", predicted.to_string()), ("gold", gold.to_string())].into();
    let system = judge.catalog.render(TemplateId::JudgeSystem, &BTreeMap::new()).map_err(|e| e.to_string())?;
    let user = judge.catalog.render(TemplateId::Judge, &bindings).map_err(|e| e.to_string())?;
    let request = ChatRequest {
        messages: vec![ChatMessage::system(system), ChatMessage::user(user)],
        temperature: 0.0,
        max_tokens: judge.max_tokens,
        model_name: judge.model_name.clone(),
    };
    let ctx = RequestContext::new(instance_id, Stage::Judge);
    let response = judge.backend.complete(&ctx, &request).map_err(|e| e.to_string())?;
    parse_yes_no(&response.text)
        .map(|v| (v, response.text.trim().to_string()))
        .ok_or_else(|| format!("no VERDICT: YES/NO line in {:?}", response.text))
}

/// Reads the last `VERDICT: YES|NO` line.
pub fn parse_yes_no(text: &str) -> Option<bool> {
    text.lines().rev().find_map(|line| {
        let rest = strip_marker(line, "verdict")?;
        match rest.trim().trim_end_matches('.').to_ascii_lowercase().as_str() {
            "yes" => Some(true),
            "no" => Some(false),
            _ => None,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(a: &str, b: &str) -> bool {
        rule_equivalent(a, b, SynonymTable::builtin()).0
    }

    #[test]
    fn alcohol_matches_alcoholic_beverages() {
        assert!(rule("Alcohol", "Alcoholic Beverages"));
        assert!(rule("Alcoholic Beverages", "Alcohol"));
        assert!(rule("Alcohol", "Beverage"));
    }

    #[test]
    fn identity_and_plural() {
        assert!(rule("Fruit", "Fruit"));
        assert!(rule("Spices", "Spice"));
        assert!(rule("nuts & seeds", "Nut and Seed"));
        assert!(!rule("Fruit", "Vegetable"));
        assert!(!rule("", "Fruit"));
        assert!(!rule("banana bread", "Fruit"));
    }

    #[test]
    fn synonym_keys_are_not_category_labels() {
        for key in SynonymTable::builtin().aliases.keys() {
            assert!(Category::parse_label(key).is_none(), "{key}");
        }
    }

    #[test]
    fn yes_no_parse() {
        assert_eq!(parse_yes_no("thinking...\nVERDICT: YES"), Some(true));
        assert_eq!(parse_yes_no("**Verdict:** no."), Some(false));
        assert_eq!(parse_yes_no("maybe"), None);
    }
}
