use super::*;

/// Lower edges of the molecule-count buckets; the last bucket is open-ended.
pub const DEFAULT_BUCKET_EDGES: &[usize] = &[0, 50, 100, 150, 200, 300, 500, 1000];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub lo: usize,
    /// Exclusive upper edge; `None` for the last bucket.
    pub hi: Option<usize>,
    pub foods: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoleculeCountStats {
    pub total_foods: usize,
    pub buckets: Vec<Bucket>,
    pub foods_below_100: usize,
    pub fraction_below_100: f64,
    pub min: usize,
    pub max: usize,
    pub mean: f64,
}

pub fn stats(foods: &FoodStore) -> MoleculeCountStats {
    stats_with_edges(foods, DEFAULT_BUCKET_EDGES)
}

/// Histogram of per-food molecule counts. `edges` must start at 0 and be
/// strictly increasing.
pub fn stats_with_edges(foods: &FoodStore, edges: &[usize]) -> MoleculeCountStats {
    assert!(edges.first() == Some(&0), "bucket edges must start at 0");
    assert!(edges.windows(2).all(|w| w[0] < w[1]), "bucket edges must increase");
    let counts: Vec<usize> = foods.iter().map(|f| f.molecule_ids.len()).collect();
    let total = counts.len();
    let frac = |k: usize| if total == 0 { 0.0 } else { k as f64 / total as f64 };

    let buckets = edges
        .iter()
        .enumerate()
        .map(|(i, &lo)| {
            let hi = edges.get(i + 1).copied();
            let n = counts.iter().filter(|&&c| c >= lo && hi.map_or(true, |h| c < h)).count();
            Bucket { lo, hi, foods: n, fraction: frac(n) }
        })
        .collect();
    let below = counts.iter().filter(|&&c| c < 100).count();
    MoleculeCountStats {
        total_foods: total,
        buckets,
        foods_below_100: below,
        fraction_below_100: frac(below),
        min: counts.iter().copied().min().unwrap_or(0),
        max: counts.iter().copied().max().unwrap_or(0),
        mean: if total == 0 { 0.0 } else { counts.iter().sum::<usize>() as f64 / total as f64 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::category::Category;
    use crate::dataset::testdata::food;

    fn store(sizes: &[u64]) -> FoodStore {
        FoodStore::from_records(
            sizes
                .iter()
                .enumerate()
                .map(|(i, &n)| food(i as u64 + 1, "f", Category::Dish, &(1..=n).collect::<Vec<_>>())),
        )
    }

    #[test]
    fn fraction_below_100_counts_directly() {
        let s = stats(&store(&[1, 2, 3, 150]));
        assert_eq!(s.fraction_below_100, 0.75);
        assert_eq!(s.foods_below_100, 3);
        assert_eq!((s.min, s.max), (1, 150));
    }

    #[test]
    fn empty_buckets_are_zero_and_fractions_sum_to_one() {
        let s = stats(&store(&[1, 2, 3, 150]));
        let sum: f64 = s.buckets.iter().map(|b| b.fraction).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        let b = s.buckets.iter().find(|b| b.lo == 500).unwrap();
        assert_eq!(b.foods, 0);
        assert_eq!(s.buckets.iter().map(|b| b.foods).sum::<usize>(), 4);
    }

    #[test]
    fn custom_edges() {
        let s = stats_with_edges(&store(&[5, 10, 20]), &[0, 10]);
        assert_eq!(s.buckets[0].foods, 1);
        assert_eq!(s.buckets[1].foods, 2);
        assert_eq!(s.buckets[1].hi, None);
    }
}
