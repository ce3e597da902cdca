use super::*;
use crate::rng::SeededRng;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Dev,
    Test,
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitTag::Train => "train",
            SplitTag::Dev => "dev",
            SplitTag::Test => "test",
        })
    }
}

impl FromStr for SplitTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(SplitTag::Train),
            "dev" => Ok(SplitTag::Dev),
            "test" => Ok(SplitTag::Test),
            other => Err(format!("unknown split {other:?} (expected train, dev or test)")),
        }
    }
}

/// Train/dev/test partition of food ids, each list in shuffled order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub seed: u64,
    pub train: Vec<FoodId>,
    pub dev: Vec<FoodId>,
    pub test: Vec<FoodId>,
}

impl DatasetSplit {
    pub fn ids(&self, tag: SplitTag) -> &[FoodId] {
        match tag {
            SplitTag::Train => &self.train,
            SplitTag::Dev => &self.dev,
            SplitTag::Test => &self.test,
        }
    }

    pub fn tag_of(&self, food: FoodId) -> Option<SplitTag> {
        [SplitTag::Train, SplitTag::Dev, SplitTag::Test].into_iter().find(|t| self.ids(*t).contains(&food))
    }
}

/// Shuffle the ascending food ids with the seeded generator, then slice
/// floor(0.8N) / floor(0.1N) / remainder.
pub fn split(foods: &FoodStore, seed: u64) -> Result<DatasetSplit, DatasetError> {
    let n = foods.len();
    if n < 10 {
        return Err(DatasetError::TooFewFoods(n));
    }
    let mut ids: Vec<FoodId> = foods.ids().collect();
    SeededRng::new(seed).shuffle(&mut ids);
    let n_train = n * 8 / 10;
    let n_dev = n / 10;
    let test = ids.split_off(n_train + n_dev);
    let dev = ids.split_off(n_train);
    Ok(DatasetSplit { seed, train: ids, dev, test })
}
