use super::*;
use crate::fsutil::read_jsonl;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFood {
    food_id: FoodId,
    name: String,
    category: String,
    molecule_ids: Vec<MoleculeId>,
}

/// Read and cross-validate an export (or saved store) directory.
pub fn ingest(dir: &Path) -> Result<Stores, DatasetError> {
    for name in [MOLECULES_FILE, FOODS_FILE, ASSOCIATIONS_FILE] {
        let p = dir.join(name);
        if !p.is_file() {
            return Err(DatasetError::MissingFile(p));
        }
    }

    let mut molecules = BTreeMap::new();
    for (line, rec) in read_jsonl::<MoleculeRecord>(&dir.join(MOLECULES_FILE))? {
        let malformed =
            |message: &str| DatasetError::Malformed { file: MOLECULES_FILE.into(), line, message: message.into() };
        if rec.molecule_id == 0 {
            return Err(malformed("molecule_id must be positive"));
        }
        if rec.name.trim().is_empty() {
            return Err(malformed("name is empty"));
        }
        if rec.properties.values().any(|v| !v.is_finite()) {
            return Err(malformed("non-finite property value"));
        }
        let id = rec.molecule_id;
        let rec = MoleculeRecord {
            name: rec.name.trim().to_string(),
            smiles: rec.smiles.map(|s| s.trim().to_string()).filter(|s| !s.is_empty()),
            ..rec
        };
        if molecules.insert(id, rec).is_some() {
            return Err(DatasetError::DuplicateId { file: MOLECULES_FILE.into(), line, id });
        }
    }

    let mut foods = BTreeMap::new();
    for (line, raw) in read_jsonl::<RawFood>(&dir.join(FOODS_FILE))? {
        let malformed =
            |message: &str| DatasetError::Malformed { file: FOODS_FILE.into(), line, message: message.into() };
        if raw.food_id == 0 {
            return Err(malformed("food_id must be positive"));
        }
        if raw.name.trim().is_empty() {
            return Err(malformed("name is empty"));
        }
        if raw.molecule_ids.is_empty() {
            return Err(malformed("molecule_ids is empty"));
        }
        if raw.molecule_ids.contains(&0) {
            return Err(malformed("molecule ids must be positive"));
        }
        let category: Category =
            raw.category.parse().map_err(|e: crate::category::UnknownCategory| DatasetError::UnknownCategory {
                file: FOODS_FILE.into(),
                line,
                given: e.given,
                suggestion: e.suggestion.to_string(),
            })?;
        for &m in &raw.molecule_ids {
            if !molecules.contains_key(&m) {
                return Err(DatasetError::DanglingMolecule { food_id: raw.food_id, molecule_id: m });
            }
        }
        let rec = FoodRecord {
            food_id: raw.food_id,
            name: raw.name.trim().to_string(),
            category,
            molecule_ids: raw.molecule_ids.into_iter().collect(),
        };
        if foods.insert(rec.food_id, rec).is_some() {
            return Err(DatasetError::DuplicateId { file: FOODS_FILE.into(), line, id: raw.food_id });
        }
    }

    let mut pairs = BTreeSet::new();
    for (line, a) in read_jsonl::<Association>(&dir.join(ASSOCIATIONS_FILE))? {
        let Some(food) = foods.get(&a.food_id) else {
            return Err(DatasetError::DanglingFood { food_id: a.food_id });
        };
        if !molecules.contains_key(&a.molecule_id) {
            return Err(DatasetError::DanglingMolecule { food_id: a.food_id, molecule_id: a.molecule_id });
        }
        if !food.molecule_ids.contains(&a.molecule_id) {
            return Err(DatasetError::InconsistentAssociation { food_id: a.food_id, molecule_id: a.molecule_id });
        }
        if !pairs.insert((a.food_id, a.molecule_id)) {
            return Err(DatasetError::Malformed {
                file: ASSOCIATIONS_FILE.into(),
                line,
                message: format!("duplicate pair ({}, {})", a.food_id, a.molecule_id),
            });
        }
    }
    // Every per-food molecule must appear as a pair.
    for f in foods.values() {
        for &m in &f.molecule_ids {
            if !pairs.contains(&(f.food_id, m)) {
                return Err(DatasetError::InconsistentAssociation { food_id: f.food_id, molecule_id: m });
            }
        }
    }

    let foods = FoodStore::from_records(foods.into_values());
    let associations = AssociationMatrix::from_foods(&foods);
    Ok(Stores { molecules: MoleculeStore::from_records(molecules.into_values()), foods, associations })
}
