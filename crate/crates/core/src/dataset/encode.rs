use super::*;

/// Binary molecule-membership vector of one food over a sorted vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureVector {
    pub food_id: FoodId,
    pub bits: Vec<bool>,
}

impl FeatureVector {
    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    /// `"101"`-style rendering.
    pub fn bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

/// All molecule ids of the store, ascending.
pub fn molecule_vocabulary(molecules: &MoleculeStore) -> Vec<MoleculeId> {
    molecules.ids().collect()
}

/// One vector per food (ascending food id). `vocabulary` must be sorted.
pub fn encode(foods: &FoodStore, vocabulary: &[MoleculeId]) -> Result<Vec<FeatureVector>, DatasetError> {
    debug_assert!(vocabulary.windows(2).all(|w| w[0] < w[1]));
    foods
        .iter()
        .map(|f| {
            let mut bits = vec![false; vocabulary.len()];
            for &m in &f.molecule_ids {
                let j = vocabulary
                    .binary_search(&m)
                    .map_err(|_| DatasetError::OutsideVocabulary { food_id: f.food_id, molecule_id: m })?;
                bits[j] = true;
            }
            Ok(FeatureVector { food_id: f.food_id, bits })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::category::Category;
    use crate::dataset::testdata::food;

    #[test]
    fn bits_follow_vocabulary_order() {
        let foods = FoodStore::from_records(vec![food(1, "a", Category::Fruit, &[5, 9])]);
        let v = encode(&foods, &[5, 7, 9]).unwrap();
        assert_eq!(v[0].bit_string(), "101");
        assert_eq!(v[0].popcount(), 2);
    }

    #[test]
    fn full_food_is_all_ones() {
        let foods = FoodStore::from_records(vec![food(1, "a", Category::Fruit, &[5, 7, 9])]);
        assert_eq!(encode(&foods, &[5, 7, 9]).unwrap()[0].bit_string(), "111");
    }

    #[test]
    fn molecule_outside_vocabulary_errors() {
        let foods = FoodStore::from_records(vec![food(1, "a", Category::Fruit, &[5, 8])]);
        assert!(matches!(
            encode(&foods, &[5, 7, 9]),
            Err(DatasetError::OutsideVocabulary { food_id: 1, molecule_id: 8 })
        ));
    }
}
