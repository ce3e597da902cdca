#![allow(dead_code)]

pub mod oracles;

use flavorbench_core::analysis::select_starting_points;
use flavorbench_core::analysis::{build_frequency_table, MoleculeFrequencyTable};
use flavorbench_core::dataset::{ingest, split, DatasetSplit, SplitTag, Stores};
use flavorbench_core::evidence::{collect, make_queries, EvidenceCache, EvidenceConfig, FixtureSearchClient};
use flavorbench_core::net::ManualClock;
use flavorbench_core::retrieval::{build_corpus, Bm25Index, Bm25Params};
use flavorbench_core::task::{make_instances, Task, TaskInstance, DEFAULT_HOLDOUT};
use std::path::PathBuf;

pub const SEED: u64 = 7;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub struct Fixture {
    pub stores: Stores,
    pub split: DatasetSplit,
    pub index: Bm25Index,
    pub frequencies: MoleculeFrequencyTable,
    pub cache: EvidenceCache,
    pub evidence_dir: tempfile::TempDir,
}

impl Fixture {
    pub fn load() -> Self {
        let stores = ingest(&fixture_dir().join("foods20")).unwrap();
        let split = split(&stores.foods, SEED).unwrap();
        let index = Bm25Index::build(&build_corpus(&stores, &split), Bm25Params::default()).unwrap();
        let frequencies = build_frequency_table(&stores.foods, &split);
        let evidence_dir = tempfile::tempdir().unwrap();
        let mut queries = Vec::new();
        for task in [Task::Mfp, Task::Mpc] {
            for inst in Self::instances_of(&stores, &split, task) {
                let selected = (task == Task::Mfp).then(|| {
                    select_starting_points(inst.molecules.iter().map(|m| m.molecule_id), &frequencies, 10).unwrap()
                });
                queries.extend(make_queries(&inst, selected.as_ref(), &stores.molecules));
            }
        }
        let client = FixtureSearchClient::load(&fixture_dir().join("search_fixture.json")).unwrap();
        let cache =
            collect(&queries, &client, evidence_dir.path(), &EvidenceConfig::default(), &ManualClock::new()).unwrap();
        Self { stores, split, index, frequencies, cache, evidence_dir }
    }

    fn instances_of(stores: &Stores, split: &DatasetSplit, task: Task) -> Vec<TaskInstance> {
        make_instances(stores, split, task, &[SplitTag::Train, SplitTag::Dev, SplitTag::Test], SEED, DEFAULT_HOLDOUT)
            .unwrap()
    }

    /// One instance per fixture food.
    pub fn instances(&self, task: Task) -> Vec<TaskInstance> {
        Self::instances_of(&self.stores, &self.split, task)
    }

    /// Instances from the held-out splits only.
    pub fn held_out(&self, task: Task) -> Vec<TaskInstance> {
        make_instances(&self.stores, &self.split, task, &[SplitTag::Dev, SplitTag::Test], SEED, DEFAULT_HOLDOUT)
            .unwrap()
    }
}
