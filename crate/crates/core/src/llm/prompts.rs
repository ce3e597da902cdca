use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::OnceLock;

pub const CATALOG_VERSION: u32 = 1;

macro_rules! templates {
    ($($variant:ident => $file:literal),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum TemplateId {
            $($variant),*
        }

        impl TemplateId {
            pub const ALL: &'static [TemplateId] = &[$(TemplateId::$variant),*];

            /// File stem under the catalog directory.
            pub fn as_str(self) -> &'static str {
                match self {
                    $(TemplateId::$variant => $file),*
                }
            }

            fn builtin_text(self) -> &'static str {
                match self {
                    $(TemplateId::$variant => include_str!(concat!("../../prompts/v1/", $file, ".txt"))),*
                }
            }
        }
    };
}

templates! {
    SystemBaseline => "system_baseline",
    MfpZeroShot => "mfp_zero_shot",
    MfpIcl => "mfp_icl",
    MpcZeroShot => "mpc_zero_shot",
    MpcIcl => "mpc_icl",
    MfpSystem => "mfp_system",
    MfpScientist => "mfp_scientist",
    MfpReviewer => "mfp_reviewer",
    MpcSystem => "mpc_system",
    MpcScientist => "mpc_scientist",
    MpcReviewer => "mpc_reviewer",
    JudgeSystem => "judge_system",
    Judge => "judge",
    Reask => "reask",
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("template {template} needs a value for {placeholder:?}")]
    Missing { template: &'static str, placeholder: String },
    #[error("template {template}: unterminated placeholder at byte {offset}")]
    Malformed { template: String, offset: usize },
    #[error("cannot read template {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Slot(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub id: TemplateId,
    pieces: Vec<Piece>,
}

impl PromptTemplate {
    pub fn parse(id: TemplateId, text: &str) -> Result<Self, PromptError> {
        let mut pieces = Vec::new();
        let mut rest = text;
        let mut offset = 0;
        while let Some(start) = rest.find("{{") {
            let Some(len) = rest[start + 2..].find("}}") else {
                return Err(PromptError::Malformed { template: id.as_str().into(), offset: offset + start });
            };
            if start > 0 {
                pieces.push(Piece::Text(rest[..start].to_string()));
            }
            pieces.push(Piece::Slot(rest[start + 2..start + 2 + len].trim().to_string()));
            let consumed = start + 2 + len + 2;
            offset += consumed;
            rest = &rest[consumed..];
        }
        if !rest.is_empty() {
            pieces.push(Piece::Text(rest.to_string()));
        }
        Ok(Self { id, pieces })
    }

    /// Placeholder names, sorted.
    pub fn placeholders(&self) -> BTreeSet<&str> {
        self.pieces
            .iter()
            .filter_map(|p| match p {
                Piece::Slot(s) => Some(s.as_str()),
                Piece::Text(_) => None,
            })
            .collect()
    }

    /// Substitute every placeholder in one pass; bound values are inserted
    /// verbatim and never re-expanded.
    pub fn render(&self, bindings: &BTreeMap<&str, String>) -> Result<String, PromptError> {
        let needed = self.placeholders();
        for key in bindings.keys() {
            if !needed.contains(key) {
                log::warn!("template {} ignores binding {key:?}", self.id.as_str());
            }
        }
        let mut out = String::new();
        for p in &self.pieces {
            match p {
                Piece::Text(t) => out.push_str(t),
                Piece::Slot(name) => match bindings.get(name.as_str()) {
                    Some(v) => out.push_str(v),
                    None => return Err(PromptError::Missing { template: self.id.as_str(), placeholder: name.clone() }),
                },
            }
        }
        Ok(out)
    }
}

/// Every template by id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptCatalog {
    templates: BTreeMap<TemplateId, PromptTemplate>,
}

impl PromptCatalog {
    /// Templates compiled into the crate.
    pub fn builtin() -> &'static PromptCatalog {
        static CATALOG: OnceLock<PromptCatalog> = OnceLock::new();
        CATALOG.get_or_init(|| {
            let templates = TemplateId::ALL
                .iter()
                .map(|&id| (id, PromptTemplate::parse(id, id.builtin_text()).expect("builtin templates parse")))
                .collect();
            PromptCatalog { templates }
        })
    }

    /// Builtin templates, overridden by any `{id}.txt` present in `dir`.
    pub fn load_dir(dir: &Path) -> Result<PromptCatalog, PromptError> {
        let mut catalog = Self::builtin().clone();
        for &id in TemplateId::ALL {
            let path = dir.join(format!("{}.txt", id.as_str()));
            if path.exists() {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| PromptError::Io { path: path.display().to_string(), message: e.to_string() })?;
                catalog.templates.insert(id, PromptTemplate::parse(id, &text)?);
            }
        }
        Ok(catalog)
    }

    pub fn get(&self, id: TemplateId) -> &PromptTemplate {
        &self.templates[&id]
    }

    pub fn render(&self, id: TemplateId, bindings: &BTreeMap<&str, String>) -> Result<String, PromptError> {
        self.get(id).render(bindings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::category::Category;

    fn b(pairs: &[(&'static str, &str)]) -> BTreeMap<&'static str, String> {
        pairs.iter().map(|(k, v)| (*k, v.to_string())).collect()
    }

    #[test]
    fn mfp_zero_shot_lists_categories_and_molecules() {
        let cats = Category::label_list();
        let text = PromptCatalog::builtin()
            .render(TemplateId::MfpZeroShot, &b(&[("categories", &cats), ("molecules", "Hexanal, Furfural")]))
            .unwrap();
        assert!(text.contains("Hexanal, Furfural"));
        for c in Category::ALL {
            assert!(text.contains(c.label()));
        }
        assert!(!text.contains("{{"));
    }

    #[test]
    fn missing_binding_is_named() {
        let err = PromptCatalog::builtin().render(TemplateId::MfpZeroShot, &b(&[("categories", "x")])).unwrap_err();
        assert_eq!(err, PromptError::Missing { template: "mfp_zero_shot", placeholder: "molecules".into() });
    }

    #[test]
    fn extra_bindings_ignored_and_values_not_reexpanded() {
        let t = PromptTemplate::parse(TemplateId::Reask, "a {{x}} b").unwrap();
        assert_eq!(t.render(&b(&[("x", "{{y}}"), ("unused", "z")])).unwrap(), "a {{y}} b");
        assert!(PromptTemplate::parse(TemplateId::Reask, "a {{x").is_err());
    }

    #[test]
    fn every_builtin_renders_when_fully_bound() {
        let cat = PromptCatalog::builtin();
        for &id in TemplateId::ALL {
            let t = cat.get(id);
            let binds: BTreeMap<&str, String> = t.placeholders().into_iter().map(|p| (p, "v".to_string())).collect();
            let text = t.render(&binds).unwrap();
            assert!(!text.contains("{{") && !text.contains("}}"), "{id:?}");
        }
    }

    #[test]
    fn directory_overrides() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("judge.txt"), "P={{predicted}} G={{gold}}").unwrap();
        let c = PromptCatalog::load_dir(dir.path()).unwrap();
        assert_eq!(c.render(TemplateId::Judge, &b(&[("predicted", "a"), ("gold", "b")])).unwrap(), "P=a G=b");
        assert_eq!(c.get(TemplateId::MfpIcl), PromptCatalog::builtin().get(TemplateId::MfpIcl));
    }
}
