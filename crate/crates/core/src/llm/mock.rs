use super::chat::{ChatBackend, ChatRequest, ChatResponse, LlmError, RequestContext, Stage};
use crate::category::Category;
use crate::eval::{rule_equivalent, SynonymTable};
use crate::net::NetError;
use crate::task::{Task, TaskInstance};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

/// One entry of a scripted mock. Unset matchers match anything.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScriptRule {
    pub instance: Option<String>,
    pub stage: Option<Stage>,
    /// Substring of the last user message.
    pub contains: Option<String>,
    /// Reply per attempt; later attempts reuse the last entry.
    pub replies: Vec<String>,
    /// When set the rule fails instead of replying.
    pub error: Option<ScriptedError>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptedError {
    /// Fails the way a process with networking disabled would.
    Network,
    Auth,
    Backend,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Script {
    pub rules: Vec<ScriptRule>,
    /// Reply when no rule matches; an error if unset.
    pub fallback: Option<String>,
}

/// Replies from a fixed script: the first matching rule wins.
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    script: Script,
    calls: AtomicUsize,
}

impl ScriptedBackend {
    pub fn new(script: Script) -> Self {
        Self { script, calls: AtomicUsize::new(0) }
    }

    /// Answers every request with `text`.
    pub fn constant(text: impl Into<String>) -> Self {
        Self::new(Script { rules: Vec::new(), fallback: Some(text.into()) })
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LlmError::Mock(format!("cannot read script {}: {e}", path.display())))?;
        let script: Script =
            serde_json::from_str(&text).map_err(|e| LlmError::Mock(format!("script {}: {e}", path.display())))?;
        Ok(Self::new(script))
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn matching(&self, ctx: &RequestContext, request: &ChatRequest) -> Option<&ScriptRule> {
        self.script.rules.iter().find(|r| {
            r.instance.as_deref().map_or(true, |i| i == ctx.instance_id)
                && r.stage.map_or(true, |s| s == ctx.stage)
                && r.contains.as_deref().map_or(true, |c| request.last_user().contains(c))
        })
    }
}

impl ChatBackend for ScriptedBackend {
    fn name(&self) -> String {
        "mock:scripted".into()
    }

    fn complete(&self, ctx: &RequestContext, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        request.validate()?;
        self.calls.fetch_add(1, Ordering::SeqCst);
        let text = match self.matching(ctx, request) {
            Some(rule) => {
                if let Some(kind) = rule.error {
                    return Err(match kind {
                        ScriptedError::Network => LlmError::Net(NetError::OutboundDenied),
                        ScriptedError::Auth => LlmError::Auth { url: "mock".into(), status: 401 },
                        ScriptedError::Backend => LlmError::Mock(format!("scripted failure for {}", ctx.instance_id)),
                    });
                }
                let i = (ctx.attempt as usize).min(rule.replies.len().saturating_sub(1));
                rule.replies.get(i).cloned().unwrap_or_default()
            }
            None => self
                .script
                .fallback
                .clone()
                .ok_or_else(|| LlmError::Mock(format!("no rule for {} at stage {}", ctx.instance_id, ctx.stage)))?,
        };
        Ok(ChatResponse { text, usage: None, latency_ms: 0 })
    }
}

/// Answers from the gold labels. Only for checking pipeline plumbing.
#[derive(Debug)]
pub struct OracleBackend {
    instances: BTreeMap<String, TaskInstance>,
    gold_position: Option<usize>,
    calls: AtomicUsize,
}

impl OracleBackend {
    pub fn new<'a>(instances: impl IntoIterator<Item = &'a TaskInstance>) -> Self {
        Self {
            instances: instances.into_iter().map(|i| (i.id.clone(), i.clone())).collect(),
            gold_position: None,
            calls: AtomicUsize::new(0),
        }
    }

    /// Put the gold hypothesis at a fixed 1-based position instead of a
    /// position derived from the instance id.
    pub fn with_gold_position(mut self, position: usize) -> Self {
        assert!((1..=3).contains(&position), "hypothesis positions are 1..=3");
        self.gold_position = Some(position);
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// 1-based slot of the gold hypothesis for an instance.
    pub fn gold_position(&self, instance_id: &str) -> usize {
        self.gold_position.unwrap_or_else(|| (fnv1a(instance_id.as_bytes()) % 3) as usize + 1)
    }

    fn gold_answer(instance: &TaskInstance) -> String {
        match instance.task {
            Task::Mfp => format!("ANSWER: {}\nFOOD: {}", instance.category, instance.food_name),
            Task::Mpc => format!("MOLECULES: {}", instance.missing_names().join("; ")),
        }
    }

    fn decoy(instance: &TaskInstance, slot: usize) -> String {
        match instance.task {
            Task::Mfp => {
                let at = Category::ALL.iter().position(|c| *c == instance.category).unwrap_or(0);
                format!("{}", Category::ALL[(at + slot) % Category::ALL.len()])
            }
            Task::Mpc => {
                let pool = instance.molecule_names();
                let n = instance.missing_count();
                (0..n).map(|i| pool[(i + slot) % pool.len()].clone()).collect::<Vec<_>>().join("; ")
            }
        }
    }

    fn scientist(&self, instance: &TaskInstance) -> String {
        let gold_at = self.gold_position(&instance.id);
        let gold = match instance.task {
            Task::Mfp => instance.category.to_string(),
            Task::Mpc => instance.missing_names().join("; "),
        };
        (1..=3)
            .map(|i| {
                let answer = if i == gold_at { gold.clone() } else { Self::decoy(instance, i) };
                format!("HYPOTHESIS {i}: {answer}\nRATIONALE: oracle slot {i}.")
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    fn judge(request: &ChatRequest) -> Result<String, LlmError> {
        let text = request.last_user();
        let field =
            |name: &str| text.lines().find_map(|l| l.trim().strip_prefix(name)).map(str::trim).map(str::to_string);
        let (Some(p), Some(g)) = (field("Predicted:"), field("Reference:")) else {
            return Err(LlmError::Mock("judge prompt lacks Predicted:/Reference: lines".into()));
        };
        let (yes, _) = rule_equivalent(&p, &g, SynonymTable::builtin());
        Ok(format!("VERDICT: {}", if yes { "YES" } else { "NO" }))
    }
}

impl ChatBackend for OracleBackend {
    fn name(&self) -> String {
        "mock:oracle".into()
    }

    fn complete(&self, ctx: &RequestContext, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        request.validate()?;
        self.calls.fetch_add(1, Ordering::SeqCst);
        let text = if ctx.stage == Stage::Judge {
            Self::judge(request)?
        } else {
            let instance = self
                .instances
                .get(&ctx.instance_id)
                .ok_or_else(|| LlmError::Mock(format!("oracle has no instance {}", ctx.instance_id)))?;
            match ctx.stage {
                Stage::ZeroShot | Stage::Icl => Self::gold_answer(instance),
                Stage::Scientist => self.scientist(instance),
                Stage::Reviewer => format!(
                    "The best supported option is hypothesis {0}.\nVERDICT: SELECT {0}",
                    self.gold_position(&instance.id)
                ),
                Stage::Judge => unreachable!(),
            }
        };
        Ok(ChatResponse { text, usage: None, latency_ms: 0 })
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ChatMessage;

    fn req(user: &str) -> ChatRequest {
        ChatRequest {
            messages: vec![ChatMessage::user(user)],
            temperature: 0.0,
            max_tokens: 64,
            model_name: "m".into(),
        }
    }

    #[test]
    fn constant_reply() {
        let m = ScriptedBackend::constant("ANSWER: Fruit");
        let r = m.complete(&RequestContext::new("x", Stage::ZeroShot), &req("q")).unwrap();
        assert_eq!(r.text, "ANSWER: Fruit");
        assert_eq!(m.calls(), 1);
    }

    #[test]
    fn rules_match_in_order_and_by_attempt() {
        let script: Script = serde_json::from_value(serde_json::json!({
            "rules": [
                { "instance": "mfp-000001", "stage": "reviewer", "replies": ["VERDICT: REJECT"] },
                { "contains": "lemon", "replies": ["prose", "ANSWER: Fruit"] },
                { "instance": "mfp-000009", "error": "network" }
            ]
        }))
        .unwrap();
        let m = ScriptedBackend::new(script);
        let ctx = RequestContext::new("mfp-000001", Stage::Reviewer);
        assert_eq!(m.complete(&ctx, &req("lemon")).unwrap().text, "VERDICT: REJECT");
        let ctx = RequestContext::new("mfp-000002", Stage::Icl);
        assert_eq!(m.complete(&ctx, &req("lemon")).unwrap().text, "prose");
        assert_eq!(m.complete(&ctx.reask(1), &req("lemon")).unwrap().text, "ANSWER: Fruit");
        assert_eq!(m.complete(&ctx.reask(2), &req("lemon")).unwrap().text, "ANSWER: Fruit");
        assert!(m.complete(&ctx, &req("other")).is_err());
        let err = m.complete(&RequestContext::new("mfp-000009", Stage::Icl), &req("x")).unwrap_err();
        assert!(err.is_network());
    }

    #[test]
    fn oracle_judge_reads_prompt_lines() {
        let m = OracleBackend::new([]);
        let ctx = RequestContext::new("mfp-000001", Stage::Judge);
        assert_eq!(m.complete(&ctx, &req("Predicted: Spices\nReference: Spice")).unwrap().text, "VERDICT: YES");
        assert_eq!(m.complete(&ctx, &req("Predicted: Meat\nReference: Spice")).unwrap().text, "VERDICT: NO");
    }
}
