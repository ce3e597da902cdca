//! The closed set of 21 macro food categories and label normalization.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

/// One of the 21 macro categories a food belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Cereal,
    Fruit,
    EssentialOil,
    Plant,
    Bakery,
    Fungus,
    Seed,
    Dish,
    Spice,
    Flower,
    NutAndSeed,
    Beverage,
    AnimalProduct,
    Vegetable,
    PlantDerivative,
    Additive,
    Meat,
    FishAndSeafood,
    CerealCrop,
    Dairy,
    Herb,
}

impl Category {
    pub const ALL: [Category; 21] = [
        Category::Cereal,
        Category::Fruit,
        Category::EssentialOil,
        Category::Plant,
        Category::Bakery,
        Category::Fungus,
        Category::Seed,
        Category::Dish,
        Category::Spice,
        Category::Flower,
        Category::NutAndSeed,
        Category::Beverage,
        Category::AnimalProduct,
        Category::Vegetable,
        Category::PlantDerivative,
        Category::Additive,
        Category::Meat,
        Category::FishAndSeafood,
        Category::CerealCrop,
        Category::Dairy,
        Category::Herb,
    ];

    /// Canonical display label.
    pub fn label(self) -> &'static str {
        match self {
            Category::Cereal => "Cereal",
            Category::Fruit => "Fruit",
            Category::EssentialOil => "Essential Oil",
            Category::Plant => "Plant",
            Category::Bakery => "Bakery",
            Category::Fungus => "Fungus",
            Category::Seed => "Seed",
            Category::Dish => "Dish",
            Category::Spice => "Spice",
            Category::Flower => "Flower",
            Category::NutAndSeed => "Nut and Seed",
            Category::Beverage => "Beverage",
            Category::AnimalProduct => "Animal Product",
            Category::Vegetable => "Vegetable",
            Category::PlantDerivative => "Plant Derivative",
            Category::Additive => "Additive",
            Category::Meat => "Meat",
            Category::FishAndSeafood => "Fish and Seafood",
            Category::CerealCrop => "Cereal Crop",
            Category::Dairy => "Dairy",
            Category::Herb => "Herb",
        }
    }

    /// Case- and trailing-plural-insensitive lookup against the canonical labels.
    pub fn parse_label(s: &str) -> Option<Category> {
        let key = normalize_label(s);
        Category::ALL.iter().copied().find(|c| normalize_label(c.label()) == key)
    }

    /// The canonical label closest to `s` by edit distance over normalized forms.
    pub fn nearest(s: &str) -> Category {
        let key = normalize_label(s);
        Category::ALL
            .iter()
            .copied()
            .min_by_key(|c| (strsim::levenshtein(&key, &normalize_label(c.label())), *c))
            .expect("category table is non-empty")
    }

    /// Comma-separated list of every label, in table order.
    pub fn label_list() -> String {
        Category::ALL.iter().map(|c| c.label()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown category {given:?} (did you mean {suggestion:?}?)")]
pub struct UnknownCategory {
    pub given: String,
    pub suggestion: &'static str,
}

impl FromStr for Category {
    type Err = UnknownCategory;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::parse_label(s)
            .ok_or_else(|| UnknownCategory { given: s.to_string(), suggestion: Category::nearest(s).label() })
    }
}

impl Serialize for Category {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Category {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Lowercase, drop punctuation, collapse whitespace and singularize each word.
pub fn normalize_label(s: &str) -> String {
    let cleaned: String = s.chars().map(|c| if c.is_alphanumeric() { c.to_ascii_lowercase() } else { ' ' }).collect();
    cleaned.split_whitespace().map(singularize).collect::<Vec<_>>().join(" ")
}

fn singularize(word: &str) -> String {
    if word.len() <= 3 || word.ends_with("ss") || word.ends_with("us") {
        return word.to_string();
    }
    if let Some(stem) = word.strip_suffix("ies") {
        return format!("{stem}y");
    }
    for suffix in ["shes", "ches", "xes"] {
        if word.ends_with(suffix) {
            return word[..word.len() - 2].to_string();
        }
    }
    match word.strip_suffix('s') {
        Some(stem) => stem.to_string(),
        None => word.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_one_distinct_labels() {
        let mut labels: Vec<_> = Category::ALL.iter().map(|c| normalize_label(c.label())).collect();
        labels.sort();
        labels.dedup();
        assert_eq!(labels.len(), 21);
    }

    #[test]
    fn case_and_plural_insensitive() {
        assert_eq!(Category::parse_label("spices"), Some(Category::Spice));
        assert_eq!(Category::parse_label("FRUITS"), Some(Category::Fruit));
        assert_eq!(Category::parse_label("Nuts and Seeds"), Some(Category::NutAndSeed));
        assert_eq!(Category::parse_label("dishes"), Some(Category::Dish));
        assert_eq!(Category::parse_label("Fungus"), Some(Category::Fungus));
        assert_eq!(Category::parse_label("Essential  oils"), Some(Category::EssentialOil));
    }

    #[test]
    fn unknown_label_suggests_nearest() {
        let err = "Vegetabel".parse::<Category>().unwrap_err();
        assert_eq!(err.suggestion, "Vegetable");
        assert!("Snack".parse::<Category>().is_err());
    }

    #[test]
    fn serde_uses_canonical_label() {
        let json = serde_json::to_string(&Category::FishAndSeafood).unwrap();
        assert_eq!(json, "\"Fish and Seafood\"");
        let back: Category = serde_json::from_str("\"fish and seafoods\"").unwrap();
        assert_eq!(back, Category::FishAndSeafood);
    }
}
