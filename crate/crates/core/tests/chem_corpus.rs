mod common;

use common::oracles::{label_set, CHEM_CORPUS};
use flavorbench_core::chem::{functional_groups, group_f1, parse_smiles, set_f1, write_smiles_randomized, GroupTable};
use proptest::prelude::*;
use std::collections::BTreeSet;

fn labels(smiles: &str) -> BTreeSet<String> {
    functional_groups(&parse_smiles(smiles).unwrap())
}

#[test]
fn curated_corpus_group_sets() {
    for (name, smiles, groups) in CHEM_CORPUS {
        assert_eq!(labels(smiles), label_set(groups), "{name}");
    }
}

#[test]
fn documented_f1_cases() {
    let a = label_set(&["hydroxyl", "ester"]);
    let b = label_set(&["hydroxyl", "carbonyl", "ester"]);
    assert!((set_f1(&a, &b) - 0.8).abs() < 1e-12);
    assert!((set_f1(&a, &a) - 1.0).abs() < 1e-12);
    assert!(set_f1(&a, &label_set(&["thiol"])).abs() < 1e-12);
}

#[test]
fn self_f1_is_one_over_corpus() {
    let t = GroupTable::builtin();
    for (_, smiles, _) in CHEM_CORPUS {
        assert_eq!(group_f1(t, &[smiles], &[smiles]).unwrap(), 1.0);
    }
}

#[test]
fn groups_survive_atom_reordering() {
    for (name, smiles, _) in CHEM_CORPUS {
        let g = parse_smiles(smiles).unwrap();
        let want = functional_groups(&g);
        for seed in 0..25 {
            let rewritten = write_smiles_randomized(&g, seed);
            let h = parse_smiles(&rewritten).unwrap();
            assert_eq!(functional_groups(&h), want, "{name} as {rewritten}");
        }
    }
}

#[test]
fn parsing_is_deterministic() {
    for (_, smiles, _) in CHEM_CORPUS {
        assert_eq!(parse_smiles(smiles).unwrap(), parse_smiles(smiles).unwrap());
    }
}

#[test]
fn acid_sites_never_report_hydroxyl_or_ketone() {
    let t = GroupTable::builtin();
    for smiles in ["CC(=O)O", "OC(=O)CCC(=O)O", "OCC(=O)O", "CCCCC(=O)O"] {
        let g = parse_smiles(smiles).unwrap();
        let ms = t.matches(&g);
        let acid_atoms: Vec<&BTreeSet<usize>> =
            ms.iter().filter(|m| m.label == "carboxylic_acid").map(|m| &m.atoms).collect();
        for m in ms.iter().filter(|m| m.suppressed_by.is_none()) {
            if m.label == "hydroxyl" || m.label == "ketone" {
                assert!(acid_atoms.iter().all(|a| !m.site.is_subset(a)), "{smiles}: {m:?}");
            }
        }
    }
}

fn arb_labels() -> impl Strategy<Value = BTreeSet<String>> {
    let labels: Vec<String> = GroupTable::builtin().labels().map(str::to_string).collect();
    proptest::sample::subsequence(labels, 0..=6).prop_map(|v| v.into_iter().collect())
}

proptest! {
    #[test]
    fn f1_symmetric_and_bounded(a in arb_labels(), b in arb_labels()) {
        let ab = set_f1(&a, &b);
        prop_assert_eq!(ab, set_f1(&b, &a));
        prop_assert!((0.0..=1.0).contains(&ab));
        if !a.is_empty() {
            prop_assert_eq!(set_f1(&a, &a), 1.0);
        }
    }

    #[test]
    fn structure_f1_symmetric(i in 0..CHEM_CORPUS.len(), j in 0..CHEM_CORPUS.len(), k in 0..CHEM_CORPUS.len()) {
        let t = GroupTable::builtin();
        let p = [CHEM_CORPUS[i].1, CHEM_CORPUS[j].1];
        let g = [CHEM_CORPUS[k].1];
        prop_assert_eq!(group_f1(t, &p, &g).unwrap(), group_f1(t, &g, &p).unwrap());
    }
}
