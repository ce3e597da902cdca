use crate::analysis::SelectedMolecules;
use crate::dataset::MoleculeStore;
use crate::task::{Task, TaskInstance};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    MoleculeSources,
    FoodMolecules,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceQuery {
    pub kind: QueryKind,
    pub subject: String,
    pub text: String,
}

impl EvidenceQuery {
    pub fn molecule_sources(molecule: &str) -> Self {
        Self {
            kind: QueryKind::MoleculeSources,
            subject: molecule.to_string(),
            text: format!("What are the common food sources that could contain {molecule}?"),
        }
    }

    pub fn food_molecules(food: &str) -> Self {
        Self {
            kind: QueryKind::FoodMolecules,
            subject: food.to_string(),
            text: format!("What molecules are present in {food}?"),
        }
    }

    pub fn key(&self) -> String {
        normalize_query(&self.text)
    }
}

/// Lowercase and collapse runs of whitespace.
pub fn normalize_query(text: &str) -> String {
    text.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

/// MFP: one molecule-sources query per selected molecule. MPC: one
/// food-molecules query for the instance's food.
pub fn make_queries(
    instance: &TaskInstance,
    selected: Option<&SelectedMolecules>,
    molecules: &MoleculeStore,
) -> Vec<EvidenceQuery> {
    match instance.task {
        Task::Mfp => selected
            .map(|s| {
                s.molecules
                    .iter()
                    .filter_map(|m| molecules.name_of(m.molecule_id))
                    .map(EvidenceQuery::molecule_sources)
                    .collect()
            })
            .unwrap_or_default(),
        Task::Mpc => vec![EvidenceQuery::food_molecules(&instance.food_name)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates_verbatim() {
        assert_eq!(EvidenceQuery::food_molecules("Coffee").text, "What molecules are present in Coffee?");
        assert_eq!(
            EvidenceQuery::molecule_sources("hexanal").text,
            "What are the common food sources that could contain hexanal?"
        );
    }

    #[test]
    fn keys_are_normalized() {
        assert_eq!(
            normalize_query("  What   Molecules are\tpresent in COFFEE? "),
            "what molecules are present in coffee?"
        );
        assert_eq!(EvidenceQuery::food_molecules("Coffee").key(), EvidenceQuery::food_molecules("coffee").key());
    }
}
