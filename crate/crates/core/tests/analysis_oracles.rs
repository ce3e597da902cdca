mod common;

use common::oracles::{covariance_eigen, random_rows, selection_brute_force, selection_case};
use flavorbench_core::analysis::{
    binary_entropy, pca_rows, select_starting_points, MoleculeFrequencyTable, MAX_STARTING_POINTS,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[test]
fn top_two_components_match_dense_oracle() {
    let mut rng = StdRng::seed_from_u64(2024);
    for case in 0..10 {
        let rows = random_rows(&mut rng, 10, 10);
        let got = pca_rows(&rows, 2).unwrap();
        let (values, vectors) = covariance_eigen(&rows);
        for k in 0..2 {
            assert!((got.explained_variance[k] - values[k]).abs() < 1e-6, "case {case} value {k}");
            let dot: f64 = got.components[k].iter().zip(&vectors[k]).map(|(a, b)| a * b).sum();
            let sign = dot.signum();
            for (a, b) in got.components[k].iter().zip(&vectors[k]) {
                assert!((a - sign * b).abs() < 1e-6, "case {case} component {k}");
            }
        }
    }
}

#[test]
fn full_reconstruction_and_orthonormality() {
    let mut rng = StdRng::seed_from_u64(7);
    for (n, v) in [(10, 10), (6, 4), (5, 12)] {
        let rows = random_rows(&mut rng, n, v);
        let k = v.min(n - 1);
        let got = pca_rows(&rows, k).unwrap();
        let (values, _) = covariance_eigen(&rows);
        for (a, b) in got.explained_variance.iter().zip(&values) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!(got.explained_variance.windows(2).all(|w| w[0] >= w[1]));
        for i in 0..k {
            for j in 0..k {
                let d: f64 = got.components[i].iter().zip(&got.components[j]).map(|(a, b)| a * b).sum();
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-9);
            }
        }
        let rec = got.reconstruct_centered();
        for (r, row) in rec.iter().zip(&rows) {
            for ((x, m), y) in r.iter().zip(&got.mean).zip(row) {
                assert!((x - (y - m)).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn selection_matches_brute_force_sort() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..50 {
        let (table, input, limit) = selection_case(&mut rng);
        let got = select_starting_points(input.iter().copied(), &table, limit).unwrap();
        assert_eq!(got.ids(), selection_brute_force(&input, &table, limit));
        assert!(got.len() <= MAX_STARTING_POINTS);
    }
}

#[test]
fn hand_computed_example() {
    let table = MoleculeFrequencyTable { counts: [(1, 1), (2, 5)].into(), total_train_foods: 10 };
    assert!((binary_entropy(0.1) - 0.469).abs() < 5e-4);
    assert_eq!(binary_entropy(0.5), 1.0);
    assert_eq!(select_starting_points([1, 2], &table, 1).unwrap().ids(), [1]);
}

proptest! {
    #[test]
    fn entropy_symmetric_and_bounded(p in 0.0f64..=1.0) {
        let h = binary_entropy(p);
        prop_assert!((h - binary_entropy(1.0 - p)).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&h));
        prop_assert!(h <= binary_entropy(0.5) + 1e-12);
    }

    #[test]
    fn ordering_ignores_log_base(a in 1u64..100, b in 1u64..100, total in 200u64..400) {
        let ln = |c: u64| {
            let p = c as f64 / total as f64;
            -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
        };
        let two = |c: u64| binary_entropy(c as f64 / total as f64);
        // Counts stay below total/2, so distinct counts never share a value.
        prop_assert_eq!(ln(a) < ln(b), two(a) < two(b));
    }

    #[test]
    fn selection_ignores_input_order(mut ids in proptest::collection::vec(1u64..40, 1..20), seed in any::<u64>()) {
        let table = MoleculeFrequencyTable {
            counts: (1..30).map(|i| (i, (i * 7 + seed % 5) % 9 + 1)).collect(),
            total_train_foods: 10,
        };
        let first = select_starting_points(ids.clone(), &table, 10).unwrap();
        ids.reverse();
        let mut rng = StdRng::seed_from_u64(seed);
        for i in (1..ids.len()).rev() {
            ids.swap(i, rng.gen_range(0..=i));
        }
        prop_assert_eq!(first, select_starting_points(ids, &table, 10).unwrap());
    }
}
