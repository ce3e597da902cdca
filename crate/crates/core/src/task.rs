//! Benchmark instances for the two tasks.
//!
//! MFP (molecular food prediction) gives the full molecule set of a food and
//! asks for its category. MPC (molecular profile completion) hides a seeded
//! random subset of a food's molecules and asks for exactly that many back.

use crate::category::Category;
use crate::dataset::{DatasetSplit, FoodId, MoleculeId, SplitTag, Stores};
use crate::rng::SeededRng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Mfp,
    Mpc,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Mfp => "mfp",
            Task::Mpc => "mpc",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mfp" => Ok(Task::Mfp),
            "mpc" => Ok(Task::Mpc),
            other => Err(format!("unknown task {other:?} (expected mfp or mpc)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MoleculeRef {
    pub molecule_id: MoleculeId,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskInstance {
    /// `{task}-{food_id:06}`.
    pub id: String,
    pub task: Task,
    pub split: SplitTag,
    pub food_id: FoodId,
    pub food_name: String,
    /// The food's category; the gold answer for MFP.
    pub category: Category,
    /// MFP: the full molecule set. MPC: the retained partial set.
    pub molecules: Vec<MoleculeRef>,
    /// MPC gold: the held-out molecules. Empty for MFP.
    pub missing: Vec<MoleculeRef>,
}

impl TaskInstance {
    pub fn instance_id(task: Task, food_id: FoodId) -> String {
        format!("{task}-{food_id:06}")
    }

    pub fn molecule_names(&self) -> Vec<String> {
        self.molecules.iter().map(|m| m.name.clone()).collect()
    }

    pub fn missing_names(&self) -> Vec<String> {
        self.missing.iter().map(|m| m.name.clone()).collect()
    }

    /// Number of molecules an MPC answer must contain.
    pub fn missing_count(&self) -> usize {
        self.missing.len()
    }

    /// Check the per-task invariants against the food's full molecule set.
    pub fn validate(&self, stores: &Stores) -> Result<(), String> {
        let food =
            stores.foods.get(self.food_id).ok_or_else(|| format!("{}: unknown food {}", self.id, self.food_id))?;
        let input: Vec<MoleculeId> = self.molecules.iter().map(|m| m.molecule_id).collect();
        let missing: Vec<MoleculeId> = self.missing.iter().map(|m| m.molecule_id).collect();
        match self.task {
            Task::Mfp => {
                if input.is_empty() || !missing.is_empty() {
                    return Err(format!("{}: MFP needs a non-empty input and no held-out set", self.id));
                }
            }
            Task::Mpc => {
                if missing.is_empty() {
                    return Err(format!("{}: MPC needs at least one held-out molecule", self.id));
                }
                if input.iter().any(|m| missing.contains(m)) {
                    return Err(format!("{}: partial and held-out sets overlap", self.id));
                }
            }
        }
        let mut all: Vec<MoleculeId> = input.iter().chain(&missing).copied().collect();
        all.sort_unstable();
        if all != food.molecule_ids.iter().copied().collect::<Vec<_>>() {
            return Err(format!("{}: molecules do not cover the food's profile", self.id));
        }
        Ok(())
    }
}

/// Default MPC hold-out fraction.
pub const DEFAULT_HOLDOUT: f64 = 0.3;

/// Held-out count for a food with `size` molecules: `round(fraction * size)`
/// clamped to `1..=size-1`. `None` when the food has a single molecule.
pub fn holdout_count(size: usize, fraction: f64) -> Option<usize> {
    if size < 2 {
        return None;
    }
    Some(((fraction * size as f64).round() as usize).clamp(1, size - 1))
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InstanceError {
    #[error("hold-out fraction must lie strictly between 0 and 1, got {0}")]
    BadHoldout(f64),
}

/// One instance per food in the selected split lists, ordered by id.
pub fn make_instances(
    stores: &Stores,
    split: &DatasetSplit,
    task: Task,
    tags: &[SplitTag],
    seed: u64,
    holdout_fraction: f64,
) -> Result<Vec<TaskInstance>, InstanceError> {
    if task == Task::Mpc && !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(InstanceError::BadHoldout(holdout_fraction));
    }
    let reference = |id: MoleculeId| MoleculeRef {
        molecule_id: id,
        name: stores.molecules.name_of(id).unwrap_or_default().to_string(),
    };
    let mut out = Vec::new();
    for &tag in tags {
        for &food_id in split.ids(tag) {
            let Some(food) = stores.foods.get(food_id) else { continue };
            let all: Vec<MoleculeId> = food.molecule_ids.iter().copied().collect();
            let (molecules, missing) = match task {
                Task::Mfp => (all, Vec::new()),
                Task::Mpc => {
                    let Some(n) = holdout_count(all.len(), holdout_fraction) else {
                        log::info!("skipping food {food_id} for MPC: it has a single molecule");
                        continue;
                    };
                    let mut order = all.clone();
                    SeededRng::derived(seed, food_id).shuffle(&mut order);
                    let mut missing = order[..n].to_vec();
                    let mut partial = order[n..].to_vec();
                    missing.sort_unstable();
                    partial.sort_unstable();
                    (partial, missing)
                }
            };
            out.push(TaskInstance {
                id: TaskInstance::instance_id(task, food_id),
                task,
                split: tag,
                food_id,
                food_name: food.name.clone(),
                category: food.category,
                molecules: molecules.into_iter().map(reference).collect(),
                missing: missing.into_iter().map(reference).collect(),
            });
        }
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}
