mod common;

use common::oracles::{check_split, food_store};
use flavorbench_core::dataset::split;
use proptest::prelude::*;

#[test]
fn hundred_seeds_at_three_sizes() {
    for n in [10, 100, 978] {
        let foods = food_store(n);
        for seed in 0..100 {
            let s = split(&foods, seed).unwrap();
            check_split(&foods, &s).unwrap_or_else(|e| panic!("n={n} seed={seed}: {e}"));
            assert_eq!(s, split(&foods, seed).unwrap());
        }
    }
    let s = split(&food_store(978), 1).unwrap();
    assert_eq!((s.train.len(), s.dev.len(), s.test.len()), (782, 97, 99));
}

proptest! {
    #[test]
    fn partition_for_any_size_and_seed(n in 10u64..400, seed in any::<u64>()) {
        let foods = food_store(n);
        let s = split(&foods, seed).unwrap();
        prop_assert!(check_split(&foods, &s).is_ok());
    }
}
