use crate::chem::{parse_smiles, set_f1, FunctionalGroupSet, GroupTable};
use crate::dataset::{MoleculeId, MoleculeStore};
use serde::{Deserialize, Serialize};

/// Fraction of gold molecules allowed to lack a usable structure.
pub const DEFAULT_MAX_MISSING_SMILES: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcScore {
    /// `None` when the instance is excluded.
    pub f1: Option<f64>,
    pub excluded: Option<String>,
    pub predicted_groups: FunctionalGroupSet,
    pub gold_groups: FunctionalGroupSet,
    /// Predicted names that resolved to no structure.
    pub unresolved: Vec<String>,
}

fn groups_of(table: &GroupTable, smiles: &str) -> Option<FunctionalGroupSet> {
    parse_smiles(smiles).ok().map(|g| table.functional_groups(&g))
}

/// Functional-group F1 between predicted molecule names and the gold
/// molecules.
///
/// A predicted name is looked up in the store; failing that it is tried as
/// a raw SMILES string. Names that resolve to nothing contribute no groups.
/// The instance is excluded when more than `max_missing` of the gold
/// molecules have no parseable structure.
pub fn score_mpc(
    predicted: &[String],
    gold: &[MoleculeId],
    molecules: &MoleculeStore,
    table: &GroupTable,
    max_missing: f64,
) -> MpcScore {
    let mut gold_groups = FunctionalGroupSet::new();
    let mut missing = 0usize;
    for id in gold {
        match molecules.get(*id).and_then(|m| m.smiles.as_deref()).and_then(|s| groups_of(table, s)) {
            Some(g) => gold_groups.extend(g),
            None => missing += 1,
        }
    }
    let mut score = MpcScore {
        f1: None,
        excluded: None,
        predicted_groups: FunctionalGroupSet::new(),
        gold_groups,
        unresolved: Vec::new(),
    };
    if gold.is_empty() || missing as f64 > max_missing * gold.len() as f64 {
        score.excluded = Some(format!("{missing} of {} gold molecules lack a usable SMILES", gold.len()));
        return score;
    }
    for name in predicted {
        let from_store = molecules.by_name(name).and_then(|m| m.smiles.as_deref()).and_then(|s| groups_of(table, s));
        match from_store.or_else(|| groups_of(table, name.trim())) {
            Some(g) => score.predicted_groups.extend(g),
            None => {
                log::debug!("no structure for predicted molecule {name:?}");
                score.unresolved.push(name.clone());
            }
        }
    }
    score.f1 = Some(set_f1(&score.predicted_groups, &score.gold_groups));
    score
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::testdata::molecule;

    fn store() -> MoleculeStore {
        MoleculeStore::from_records([
            molecule(1, "ethanol", Some("CCO")),
            molecule(2, "ethyl acetate", Some("CCOC(C)=O")),
            molecule(3, "hexanal", Some("CCCCCC=O")),
            molecule(4, "mystery", None),
            molecule(5, "other mystery", None),
        ])
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn exact_prediction_scores_one() {
        let s = score_mpc(&names(&["Ethanol", "ethyl acetate"]), &[1, 2], &store(), GroupTable::builtin(), 0.5);
        assert_eq!(s.f1, Some(1.0));
    }

    #[test]
    fn documented_partial_overlap() {
        // {hydroxyl, ester} against {hydroxyl, aldehyde, ester}.
        let s = score_mpc(&names(&["ethanol", "ethyl acetate"]), &[1, 2, 3], &store(), GroupTable::builtin(), 0.5);
        assert!((s.f1.unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn raw_smiles_and_unresolved_names() {
        let s = score_mpc(&names(&["CCO", "not a molecule ((("]), &[1], &store(), GroupTable::builtin(), 0.5);
        assert_eq!(s.f1, Some(1.0));
        assert_eq!(s.unresolved, ["not a molecule ((("]);
    }

    #[test]
    fn exclusion_threshold() {
        let s = score_mpc(&names(&["ethanol"]), &[4, 5], &store(), GroupTable::builtin(), 0.5);
        assert!(s.f1.is_none() && s.excluded.is_some());
        // Exactly half missing stays in.
        let s = score_mpc(&names(&["ethanol"]), &[1, 4], &store(), GroupTable::builtin(), 0.5);
        assert_eq!(s.f1, Some(1.0));
        let s = score_mpc(&names(&["ethanol"]), &[1, 4, 5], &store(), GroupTable::builtin(), 0.5);
        assert!(s.excluded.is_some());
    }
}
