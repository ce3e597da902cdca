use crate::dataset::{DatasetSplit, FoodStore, MoleculeId, SplitTag};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Hard cap on starting points per instance.
pub const MAX_STARTING_POINTS: usize = 10;

/// How many train foods contain each molecule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoleculeFrequencyTable {
    pub counts: BTreeMap<MoleculeId, u64>,
    pub total_train_foods: u64,
}

impl MoleculeFrequencyTable {
    pub fn count(&self, molecule: MoleculeId) -> u64 {
        self.counts.get(&molecule).copied().unwrap_or(0)
    }

    /// Binary entropy of "a train food contains `molecule`", in bits.
    pub fn entropy(&self, molecule: MoleculeId) -> f64 {
        if self.total_train_foods == 0 {
            return 0.0;
        }
        binary_entropy(self.count(molecule) as f64 / self.total_train_foods as f64)
    }
}

pub fn build_frequency_table(foods: &FoodStore, split: &DatasetSplit) -> MoleculeFrequencyTable {
    let mut counts = BTreeMap::new();
    let mut total = 0;
    for id in split.ids(SplitTag::Train) {
        let Some(food) = foods.get(*id) else { continue };
        total += 1;
        for m in &food.molecule_ids {
            *counts.entry(*m).or_insert(0) += 1;
        }
    }
    MoleculeFrequencyTable { counts, total_train_foods: total }
}

/// H(p) = -p log2 p - (1-p) log2 (1-p), with H(0) = H(1) = 0.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedMolecule {
    pub molecule_id: MoleculeId,
    pub count: u64,
    pub entropy: f64,
}

/// Starting points in selection order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SelectedMolecules {
    pub molecules: Vec<SelectedMolecule>,
}

impl SelectedMolecules {
    pub fn ids(&self) -> Vec<MoleculeId> {
        self.molecules.iter().map(|m| m.molecule_id).collect()
    }

    pub fn len(&self) -> usize {
        self.molecules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.molecules.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SelectionError {
    #[error("cannot select starting points from an empty molecule set")]
    EmptyInput,
}

/// Lowest-entropy molecules of `input`, at most `min(limit, 10)`.
///
/// Ordered by ascending entropy then ascending id. Molecules no train food
/// contains come after every seen molecule.
pub fn select_starting_points(
    input: impl IntoIterator<Item = MoleculeId>,
    table: &MoleculeFrequencyTable,
    limit: usize,
) -> Result<SelectedMolecules, SelectionError> {
    let set: BTreeSet<MoleculeId> = input.into_iter().collect();
    if set.is_empty() {
        return Err(SelectionError::EmptyInput);
    }
    let mut ranked: Vec<SelectedMolecule> = set
        .into_iter()
        .map(|id| SelectedMolecule { molecule_id: id, count: table.count(id), entropy: table.entropy(id) })
        .collect();
    ranked.sort_by(|a, b| {
        (a.count == 0)
            .cmp(&(b.count == 0))
            .then(a.entropy.total_cmp(&b.entropy))
            .then(a.molecule_id.cmp(&b.molecule_id))
    });
    ranked.truncate(limit.min(MAX_STARTING_POINTS));
    Ok(SelectedMolecules { molecules: ranked })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::category::Category;
    use crate::dataset::testdata::food;

    fn table(counts: &[(MoleculeId, u64)], total: u64) -> MoleculeFrequencyTable {
        MoleculeFrequencyTable { counts: counts.iter().copied().collect(), total_train_foods: total }
    }

    #[test]
    fn counts_come_from_train_only() {
        let foods = FoodStore::from_records([
            food(1, "F1", Category::Fruit, &[1, 2]),
            food(2, "F2", Category::Fruit, &[1]),
            food(3, "F3", Category::Fruit, &[3]),
        ]);
        let split = DatasetSplit { seed: 0, train: vec![1, 2], dev: vec![], test: vec![3] };
        let t = build_frequency_table(&foods, &split);
        assert_eq!(t.total_train_foods, 2);
        assert_eq!(t.counts, BTreeMap::from([(1, 2), (2, 1)]));
        assert_eq!(t, build_frequency_table(&foods, &split));
    }

    #[test]
    fn entropy_shape() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
        assert!((binary_entropy(0.1) - 0.468_995_593_589_281_2).abs() < 1e-12);
        for i in 1..100 {
            let p = i as f64 / 100.0;
            assert!((binary_entropy(p) - binary_entropy(1.0 - p)).abs() < 1e-12);
            assert!(binary_entropy(p) <= 1.0);
        }
    }

    #[test]
    fn rare_molecule_first() {
        let t = table(&[(1, 1), (2, 5)], 10);
        let s = select_starting_points([2, 1], &t, 1).unwrap();
        assert_eq!(s.ids(), [1]);
        assert!((s.molecules[0].entropy - 0.469).abs() < 1e-3);
    }

    #[test]
    fn ties_and_unseen() {
        let t = table(&[(4, 2), (7, 2), (9, 1)], 10);
        let s = select_starting_points([7, 100, 4, 9], &t, 10).unwrap();
        assert_eq!(s.ids(), [9, 4, 7, 100]);
        assert_eq!(s.molecules[3].entropy, 0.0);
    }

    #[test]
    fn caps_and_errors() {
        let t = table(&[], 10);
        assert_eq!(select_starting_points(1..=3, &t, 10).unwrap().len(), 3);
        assert_eq!(select_starting_points(1..=30, &t, 50).unwrap().len(), 10);
        assert_eq!(select_starting_points([], &t, 10), Err(SelectionError::EmptyInput));
    }
}
