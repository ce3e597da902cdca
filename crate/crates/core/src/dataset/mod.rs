//! Molecule, food and association stores built from a line-delimited export.
//!
//! An export directory holds three files, one JSON object per line:
//!
//! - `molecules.jsonl`: `molecule_id`, `name`, `smiles`, `descriptors`, `properties`
//! - `foods.jsonl`: `food_id`, `name`, `category`, `molecule_ids`
//! - `associations.jsonl`: `food_id`, `molecule_id`
//!
//! [`ingest`] validates the three files against each other. [`Stores::save`]
//! writes the validated stores back in the same layout, canonically ordered,
//! plus a `manifest.json`.

mod encode;
pub mod fetch;
mod ingest;
mod split;
mod stats;

pub use encode::{encode, molecule_vocabulary, FeatureVector};
pub use ingest::ingest;
pub use split::{split, DatasetSplit, SplitTag};
pub use stats::{stats, stats_with_edges, Bucket, MoleculeCountStats, DEFAULT_BUCKET_EDGES};

use crate::category::Category;
use crate::fsutil::{self, JsonlError};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

pub const MOLECULES_FILE: &str = "molecules.jsonl";
pub const FOODS_FILE: &str = "foods.jsonl";
pub const ASSOCIATIONS_FILE: &str = "associations.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

pub type MoleculeId = u64;
pub type FoodId = u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoleculeRecord {
    pub molecule_id: MoleculeId,
    pub name: String,
    #[serde(default)]
    pub smiles: Option<String>,
    #[serde(default)]
    pub descriptors: Vec<String>,
    #[serde(default)]
    pub properties: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoodRecord {
    pub food_id: FoodId,
    pub name: String,
    pub category: Category,
    pub molecule_ids: BTreeSet<MoleculeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Association {
    pub food_id: FoodId,
    pub molecule_id: MoleculeId,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{file}:{line}: malformed record: {message}")]
    Malformed { file: String, line: usize, message: String },
    #[error("{file}:{line}: duplicate id {id}")]
    DuplicateId { file: String, line: usize, id: u64 },
    #[error("dangling reference: food {food_id} references unknown molecule {molecule_id}")]
    DanglingMolecule { food_id: FoodId, molecule_id: MoleculeId },
    #[error("dangling reference: association names unknown food {food_id}")]
    DanglingFood { food_id: FoodId },
    #[error("{file}:{line}: unknown category {given:?} (nearest valid label: {suggestion:?})")]
    UnknownCategory { file: String, line: usize, given: String, suggestion: String },
    #[error("association matrix disagrees with food {food_id} molecule list at molecule {molecule_id}")]
    InconsistentAssociation { food_id: FoodId, molecule_id: MoleculeId },
    #[error("split needs at least 10 foods, store has {0}")]
    TooFewFoods(usize),
    #[error("food {food_id} references molecule {molecule_id} outside the vocabulary")]
    OutsideVocabulary { food_id: FoodId, molecule_id: MoleculeId },
    #[error("fetch aborted: {0}")]
    FetchAborted(String),
}

impl From<JsonlError> for DatasetError {
    fn from(e: JsonlError) -> Self {
        match e {
            JsonlError::Io { path, source } if source.kind() == std::io::ErrorKind::NotFound => {
                DatasetError::MissingFile(PathBuf::from(path))
            }
            JsonlError::Io { path, source } => DatasetError::Io { path: PathBuf::from(path), source },
            JsonlError::Record { path, line, message } => {
                DatasetError::Malformed { file: file_name(&path), line, message }
            }
        }
    }
}

fn file_name(path: &str) -> String {
    Path::new(path).file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| path.to_string())
}

/// Molecules keyed by id, with a case-insensitive name index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MoleculeStore {
    records: BTreeMap<MoleculeId, MoleculeRecord>,
    by_name: HashMap<String, MoleculeId>,
}

impl MoleculeStore {
    pub fn from_records(records: impl IntoIterator<Item = MoleculeRecord>) -> Self {
        let mut store = MoleculeStore::default();
        for r in records {
            store.records.insert(r.molecule_id, r);
        }
        // Lowest id wins when two molecules share a name.
        for (id, r) in store.records.iter().rev() {
            store.by_name.insert(name_key(&r.name), *id);
        }
        store
    }

    pub fn get(&self, id: MoleculeId) -> Option<&MoleculeRecord> {
        self.records.get(&id)
    }

    pub fn by_name(&self, name: &str) -> Option<&MoleculeRecord> {
        self.by_name.get(&name_key(name)).and_then(|id| self.records.get(id))
    }

    pub fn contains(&self, id: MoleculeId) -> bool {
        self.records.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = &MoleculeRecord> {
        self.records.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = MoleculeId> + '_ {
        self.records.keys().copied()
    }

    pub fn name_of(&self, id: MoleculeId) -> Option<&str> {
        self.records.get(&id).map(|r| r.name.as_str())
    }
}

fn name_key(name: &str) -> String {
    name.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FoodStore {
    records: BTreeMap<FoodId, FoodRecord>,
}

impl FoodStore {
    pub fn from_records(records: impl IntoIterator<Item = FoodRecord>) -> Self {
        Self { records: records.into_iter().map(|r| (r.food_id, r)).collect() }
    }

    pub fn get(&self, id: FoodId) -> Option<&FoodRecord> {
        self.records.get(&id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = &FoodRecord> {
        self.records.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = FoodId> + '_ {
        self.records.keys().copied()
    }
}

/// The food–molecule relation as a set of pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssociationMatrix {
    pairs: BTreeSet<(FoodId, MoleculeId)>,
}

impl AssociationMatrix {
    pub fn from_foods(foods: &FoodStore) -> Self {
        Self { pairs: foods.iter().flat_map(|f| f.molecule_ids.iter().map(move |m| (f.food_id, *m))).collect() }
    }

    pub fn contains(&self, food: FoodId, molecule: MoleculeId) -> bool {
        self.pairs.contains(&(food, molecule))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Association> + '_ {
        self.pairs.iter().map(|&(food_id, molecule_id)| Association { food_id, molecule_id })
    }
}

/// The three validated, immutable stores.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Stores {
    pub molecules: MoleculeStore,
    pub foods: FoodStore,
    pub associations: AssociationMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreManifest {
    pub format_version: u32,
    pub molecules: usize,
    pub foods: usize,
    pub associations: usize,
    /// SHA-256 over the three data files, in molecules/foods/associations order.
    pub content_hash: String,
    pub ingested_at: String,
}

impl Stores {
    /// Canonical serialized bytes of the three data files.
    pub fn serialize_files(&self) -> [(&'static str, Vec<u8>); 3] {
        let molecules = fsutil::to_jsonl(self.molecules.iter()).expect("molecule records serialize");
        let foods = fsutil::to_jsonl(self.foods.iter()).expect("food records serialize");
        let assoc = fsutil::to_jsonl(self.associations.iter()).expect("associations serialize");
        [(MOLECULES_FILE, molecules), (FOODS_FILE, foods), (ASSOCIATIONS_FILE, assoc)]
    }

    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for (_, bytes) in self.serialize_files() {
            h.update(&bytes);
        }
        hex_digest(&h.finalize())
    }

    /// Write the stores plus `manifest.json` into `dir`, atomically per file.
    pub fn save(&self, dir: &Path) -> Result<StoreManifest, DatasetError> {
        let io = |source| DatasetError::Io { path: dir.to_path_buf(), source };
        let files = self.serialize_files();
        let mut h = Sha256::new();
        for (name, bytes) in &files {
            h.update(bytes);
            fsutil::write_atomic(&dir.join(name), bytes).map_err(io)?;
        }
        let manifest = StoreManifest {
            format_version: 1,
            molecules: self.molecules.len(),
            foods: self.foods.len(),
            associations: self.associations.len(),
            content_hash: hex_digest(&h.finalize()),
            ingested_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        };
        let bytes = fsutil::to_pretty_json(&manifest).expect("manifest serializes");
        fsutil::write_atomic(&dir.join(MANIFEST_FILE), &bytes).map_err(io)?;
        Ok(manifest)
    }

    /// Load a saved store directory, re-validating every invariant.
    pub fn load(dir: &Path) -> Result<Self, DatasetError> {
        ingest(dir)
    }

    /// Names of a food's molecules in ascending molecule-id order.
    pub fn molecule_names(&self, ids: impl IntoIterator<Item = MoleculeId>) -> Vec<String> {
        ids.into_iter()
            .map(|id| self.molecules.name_of(id).map(str::to_string).unwrap_or_else(|| format!("molecule {id}")))
            .collect()
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
pub(crate) mod testdata {
    use super::*;

    pub fn molecule(id: MoleculeId, name: &str, smiles: Option<&str>) -> MoleculeRecord {
        MoleculeRecord {
            molecule_id: id,
            name: name.to_string(),
            smiles: smiles.map(str::to_string),
            descriptors: vec![],
            properties: BTreeMap::new(),
        }
    }

    pub fn food(id: FoodId, name: &str, category: Category, mols: &[MoleculeId]) -> FoodRecord {
        FoodRecord { food_id: id, name: name.to_string(), category, molecule_ids: mols.iter().copied().collect() }
    }

    pub fn stores(molecules: Vec<MoleculeRecord>, foods: Vec<FoodRecord>) -> Stores {
        let foods = FoodStore::from_records(foods);
        Stores {
            molecules: MoleculeStore::from_records(molecules),
            associations: AssociationMatrix::from_foods(&foods),
            foods,
        }
    }
}
