use flavorbench_core::chem::{functional_groups, parse_smiles};
use flavorbench_core::dataset::{ingest, split};
use std::path::PathBuf;

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/foods20")
}

#[test]
fn fixture_ingests_and_every_structure_parses() {
    let stores = ingest(&fixture()).unwrap();
    assert_eq!((stores.foods.len(), stores.molecules.len()), (20, 69));
    let mut without = 0;
    for m in stores.molecules.iter() {
        match &m.smiles {
            Some(s) => {
                let g = parse_smiles(s).unwrap_or_else(|e| panic!("{}: {e}", m.name));
                assert!(!functional_groups(&g).is_empty() || m.name == "2-acetyl-1-pyrroline", "{}", m.name);
            }
            None => without += 1,
        }
    }
    assert_eq!(without, 2);
    let s = split(&stores.foods, 7).unwrap();
    assert_eq!((s.train.len(), s.dev.len(), s.test.len()), (16, 2, 2));
}
