use crate::dataset::{DatasetSplit, FoodId, SplitTag, Stores};
use serde::{Deserialize, Serialize};

/// One train food rendered as a demonstration.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Passage {
    pub food_id: FoodId,
    pub text: String,
}

/// "Food: {name}. Molecules: {m1, m2, ...}."
pub fn passage_text(food_name: &str, molecule_names: &[String]) -> String {
    format!("Food: {food_name}. Molecules: {}.", molecule_names.join(", "))
}

/// Query side of MFP retrieval: the instance's molecule list.
pub fn mfp_query(molecule_names: &[String]) -> String {
    format!("Molecules: {}.", molecule_names.join(", "))
}

/// Query side of MPC retrieval: the food and its partial profile.
pub fn mpc_query(food_name: &str, partial: &[String]) -> String {
    passage_text(food_name, partial)
}

/// One passage per train food, ordered by food id. Molecule names follow
/// ascending molecule id.
pub fn build_corpus(stores: &Stores, split: &DatasetSplit) -> Vec<Passage> {
    let mut ids: Vec<FoodId> = split.ids(SplitTag::Train).to_vec();
    ids.sort_unstable();
    ids.into_iter()
        .filter_map(|id| stores.foods.get(id))
        .map(|f| Passage {
            food_id: f.food_id,
            text: passage_text(&f.name, &stores.molecule_names(f.molecule_ids.iter().copied())),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::category::Category;
    use crate::dataset::testdata::{food, molecule, stores};

    #[test]
    fn passage_format_uses_id_order() {
        let s = stores(
            vec![molecule(3, "Hexanal", None), molecule(8, "Ethyl acetate", None), molecule(9, "Limonene", None)],
            vec![food(1, "Apple", Category::Fruit, &[8, 3]), food(2, "Lemon", Category::Fruit, &[9])],
        );
        let split = DatasetSplit { seed: 0, train: vec![2, 1], dev: vec![], test: vec![] };
        let corpus = build_corpus(&s, &split);
        assert_eq!(corpus[0].text, "Food: Apple. Molecules: Hexanal, Ethyl acetate.");
        assert_eq!(corpus[1].food_id, 2);
        let empty = DatasetSplit { seed: 0, train: vec![], dev: vec![1], test: vec![2] };
        assert!(build_corpus(&s, &empty).is_empty());
    }

    #[test]
    fn query_shapes() {
        let names = vec!["Hexanal".to_string(), "Furfural".to_string()];
        assert_eq!(mfp_query(&names), "Molecules: Hexanal, Furfural.");
        assert_eq!(mpc_query("Coffee", &names), "Food: Coffee. Molecules: Hexanal, Furfural.");
    }
}
