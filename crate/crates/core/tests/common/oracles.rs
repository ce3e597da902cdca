//! Independent reference implementations the library is checked against.

use flavorbench_core::analysis::MoleculeFrequencyTable;
use flavorbench_core::category::Category;
use flavorbench_core::dataset::{DatasetSplit, FoodRecord, FoodStore};
use flavorbench_core::retrieval::{tokenize, Passage};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::BTreeSet;

pub const VOCAB: &[&str] = &[
    "hexanal", "furfural", "vanillin", "limonene", "linalool", "geraniol", "eugenol", "menthol", "citral", "acetoin",
    "diacetyl", "maltol", "guaiacol", "anethole", "carvone", "thymol", "2", "3", "methyl", "ethyl", "butyrate",
    "acetate", "pyrazine", "furan", "acid", "alcohol", "aldehyde", "ketone", "ester", "lactone",
];

pub fn synthetic_corpus(rng: &mut StdRng, n: usize) -> Vec<Passage> {
    (0..n)
        .map(|i| {
            let len = rng.gen_range(3..25);
            let words: Vec<&str> = (0..len).map(|_| *VOCAB.choose(rng).unwrap()).collect();
            Passage { food_id: 1000 + i as u64 * 3, text: format!("Food: food{i}. Molecules: {}.", words.join(", ")) }
        })
        .collect()
}

pub fn random_query(rng: &mut StdRng) -> String {
    let len = rng.gen_range(1..8);
    (0..len).map(|_| *VOCAB.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// Evaluates the BM25 formula document by document from raw token lists.
pub fn bm25_brute_force(corpus: &[Passage], query: &str, k1: f64, b: f64) -> Vec<(u64, f64)> {
    let docs: Vec<Vec<String>> = corpus.iter().map(|p| tokenize(&p.text)).collect();
    let n = docs.len() as f64;
    let avg = docs.iter().map(|d| d.len() as f64).sum::<f64>() / n;
    let mut terms: Vec<String> = Vec::new();
    for t in tokenize(query) {
        if !terms.contains(&t) {
            terms.push(t);
        }
    }
    let mut out = Vec::new();
    for (p, d) in corpus.iter().zip(&docs) {
        let mut score = 0.0;
        let mut hit = false;
        for t in &terms {
            let tf = d.iter().filter(|x| *x == t).count() as f64;
            if tf == 0.0 {
                continue;
            }
            hit = true;
            let df = docs.iter().filter(|x| x.contains(t)).count() as f64;
            let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
            score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * d.len() as f64 / avg));
        }
        if hit {
            out.push((p.food_id, score));
        }
    }
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    out
}

pub fn random_rows(rng: &mut StdRng, n: usize, v: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..v).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

/// Eigenpairs of the sample covariance, descending, via nalgebra.
pub fn covariance_eigen(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = rows.len();
    let v = rows[0].len();
    let x = DMatrix::from_fn(n, v, |i, j| rows[i][j]);
    let mean = x.row_mean();
    let c = DMatrix::from_fn(n, v, |i, j| x[(i, j)] - mean[j]);
    let cov = c.transpose() * &c / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..v).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = order.iter().map(|&k| eig.eigenvectors.column(k).iter().copied().collect()).collect();
    (values, vectors)
}

/// Straight sort over (unseen, entropy, id), independent of the library ordering.
pub fn selection_brute_force(input: &[u64], table: &MoleculeFrequencyTable, limit: usize) -> Vec<u64> {
    let mut unique = input.to_vec();
    unique.sort();
    unique.dedup();
    let total = table.total_train_foods as f64;
    let h = |id: u64| {
        let p = *table.counts.get(&id).unwrap_or(&0) as f64 / total;
        if p == 0.0 || p == 1.0 {
            0.0
        } else {
            -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
        }
    };
    let mut keyed: Vec<(bool, f64, u64)> =
        unique.iter().map(|&id| (!table.counts.contains_key(&id), h(id), id)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.partial_cmp(&b.1).unwrap()).then(a.2.cmp(&b.2)));
    keyed.into_iter().take(limit.min(10)).map(|k| k.2).collect()
}

/// Random frequency table, molecule list and limit.
pub fn selection_case(rng: &mut StdRng) -> (MoleculeFrequencyTable, Vec<u64>, usize) {
    let total = rng.gen_range(1..=40u64);
    let counts = (0..rng.gen_range(0..30)).map(|_| (rng.gen_range(1..60), rng.gen_range(1..=total))).collect();
    let table = MoleculeFrequencyTable { counts, total_train_foods: total };
    let input: Vec<u64> = (0..rng.gen_range(1..25)).map(|_| rng.gen_range(1..60)).collect();
    (table, input, rng.gen_range(1..15))
}

/// Hand-matched against the pattern table.
pub const CHEM_CORPUS: &[(&str, &str, &[&str])] = &[
    ("ethanol", "CCO", &["hydroxyl"]),
    ("acetic acid", "CC(=O)O", &["carboxylic_acid"]),
    ("2-ethylpyrazine", "CCc1cnccn1", &["aromatic_ring", "pyrazine"]),
    ("ethyl acetate", "CCOC(C)=O", &["ester"]),
    ("hexanal", "CCCCCC=O", &["aldehyde"]),
    ("benzaldehyde", "O=Cc1ccccc1", &["aldehyde", "aromatic_ring"]),
    ("dimethyl sulfide", "CSC", &["sulfide"]),
    ("ethanethiol", "CCS", &["thiol"]),
    ("limonene", "CC1=CCC(CC1)C(=C)C", &["alkene"]),
    ("acetamide", "CC(N)=O", &["amide"]),
];

pub fn label_set(groups: &[&str]) -> BTreeSet<String> {
    groups.iter().map(|s| s.to_string()).collect()
}

/// `n` foods with ids that are not simply 1..=n.
pub fn food_store(n: u64) -> FoodStore {
    FoodStore::from_records((0..n).map(|i| FoodRecord {
        food_id: 7 + i * 5,
        name: format!("food {i}"),
        category: Category::Fruit,
        molecule_ids: Default::default(),
    }))
}

/// Partition invariants and the floor(0.8N)/floor(0.1N)/remainder sizes.
pub fn check_split(foods: &FoodStore, s: &DatasetSplit) -> Result<(), String> {
    let n = foods.len();
    let sizes = (s.train.len(), s.dev.len(), s.test.len());
    let want = (n * 8 / 10, n / 10, n - n * 8 / 10 - n / 10);
    if sizes != want {
        return Err(format!("sizes {sizes:?}, want {want:?}"));
    }
    let mut all: Vec<u64> = s.train.iter().chain(&s.dev).chain(&s.test).copied().collect();
    all.sort();
    let before = all.len();
    all.dedup();
    if all.len() != before {
        return Err("a food appears in two partitions".into());
    }
    if all != foods.ids().collect::<Vec<_>>() {
        return Err("partitions do not cover the food store".into());
    }
    Ok(())
}
