use super::graph::MolGraph;
use super::pattern::{Pattern, PatternError};
use super::smiles::{parse_smiles, SmilesError};
use serde::Deserialize;
use std::collections::BTreeSet;
use std::path::Path;
use std::sync::OnceLock;

const BUILTIN_TABLE: &str = include_str!("../../data/functional_groups.json");

/// Labels of the functional groups present in a molecule or molecule set.
pub type FunctionalGroupSet = BTreeSet<String>;

#[derive(Debug, thiserror::Error)]
pub enum GroupTableError {
    #[error("cannot read group table {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed group table: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error("group table: {0}")]
    Invalid(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    version: u32,
    groups: Vec<RawGroup>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGroup {
    label: String,
    #[serde(default)]
    description: String,
    patterns: Vec<String>,
    #[serde(default)]
    suppresses: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct GroupDef {
    pub label: String,
    pub description: String,
    pub patterns: Vec<Pattern>,
    /// Labels hidden when their match site lies inside one of this group's sites.
    pub suppresses: Vec<String>,
}

/// The versioned pattern table that defines the group taxonomy.
#[derive(Debug, Clone)]
pub struct GroupTable {
    pub version: u32,
    pub groups: Vec<GroupDef>,
}

/// A located group occurrence, with the suppressing label if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupMatch {
    pub label: String,
    pub site: BTreeSet<usize>,
    pub atoms: BTreeSet<usize>,
    pub suppressed_by: Option<String>,
}

impl GroupTable {
    /// The table shipped with the crate.
    pub fn builtin() -> &'static GroupTable {
        static TABLE: OnceLock<GroupTable> = OnceLock::new();
        TABLE.get_or_init(|| GroupTable::from_json(BUILTIN_TABLE).expect("builtin group table is valid"))
    }

    pub fn load(path: &Path) -> Result<Self, GroupTableError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| GroupTableError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, GroupTableError> {
        let raw: RawTable = serde_json::from_str(text)?;
        let labels: BTreeSet<&str> = raw.groups.iter().map(|g| g.label.as_str()).collect();
        if labels.len() != raw.groups.len() {
            return Err(GroupTableError::Invalid("duplicate labels".into()));
        }
        let mut groups = Vec::new();
        for g in &raw.groups {
            if g.patterns.is_empty() {
                return Err(GroupTableError::Invalid(format!("{} has no patterns", g.label)));
            }
            if let Some(bad) = g.suppresses.iter().find(|s| !labels.contains(s.as_str())) {
                return Err(GroupTableError::Invalid(format!("{} suppresses unknown label {bad}", g.label)));
            }
            groups.push(GroupDef {
                label: g.label.clone(),
                description: g.description.clone(),
                patterns: g.patterns.iter().map(|p| Pattern::parse(p)).collect::<Result<_, _>>()?,
                suppresses: g.suppresses.clone(),
            });
        }
        Ok(Self { version: raw.version, groups })
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.groups.iter().map(|g| g.label.as_str())
    }

    /// Every occurrence of every group, with suppression resolved.
    pub fn matches(&self, g: &MolGraph) -> Vec<GroupMatch> {
        let mut out: Vec<GroupMatch> = Vec::new();
        for def in &self.groups {
            let mut seen = BTreeSet::new();
            for p in &def.patterns {
                for m in p.find_all(g) {
                    if seen.insert(m.site.clone()) {
                        out.push(GroupMatch {
                            label: def.label.clone(),
                            site: m.site,
                            atoms: m.atoms,
                            suppressed_by: None,
                        });
                    }
                }
            }
        }
        let suppressors: Vec<(usize, &GroupDef)> = out
            .iter()
            .enumerate()
            .filter_map(|(i, m)| {
                let def = self.groups.iter().find(|d| d.label == m.label)?;
                (!def.suppresses.is_empty()).then_some((i, def))
            })
            .collect();
        let mut suppressed = vec![None; out.len()];
        for (i, m) in out.iter().enumerate() {
            suppressed[i] = suppressors
                .iter()
                .find(|(j, def)| *j != i && def.suppresses.contains(&m.label) && m.site.is_subset(&out[*j].site))
                .map(|(_, def)| def.label.clone());
        }
        for (m, s) in out.iter_mut().zip(suppressed) {
            m.suppressed_by = s;
        }
        out
    }

    /// Labels with at least one unsuppressed occurrence.
    pub fn functional_groups(&self, g: &MolGraph) -> FunctionalGroupSet {
        self.matches(g).into_iter().filter(|m| m.suppressed_by.is_none()).map(|m| m.label).collect()
    }
}

/// Functional groups of one molecule under the builtin table.
pub fn functional_groups(g: &MolGraph) -> FunctionalGroupSet {
    GroupTable::builtin().functional_groups(g)
}

/// F1 overlap of two group sets: 2|A∩B| / (|A|+|B|). Two empty sets score 1.
pub fn set_f1<T: Ord>(predicted: &BTreeSet<T>, gold: &BTreeSet<T>) -> f64 {
    let denom = predicted.len() + gold.len();
    if denom == 0 {
        return 1.0;
    }
    let inter = predicted.intersection(gold).count();
    2.0 * inter as f64 / denom as f64
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("molecule {molecule:?}: {source}")]
pub struct MoleculeParseError {
    pub molecule: String,
    pub source: SmilesError,
}

/// Union of the groups over a set of structures.
pub fn set_groups<'a>(
    table: &GroupTable,
    smiles: impl IntoIterator<Item = &'a str>,
) -> Result<FunctionalGroupSet, MoleculeParseError> {
    let mut out = FunctionalGroupSet::new();
    for s in smiles {
        let g = parse_smiles(s).map_err(|source| MoleculeParseError { molecule: s.to_string(), source })?;
        out.extend(table.functional_groups(&g));
    }
    Ok(out)
}

/// Group-level F1 between a predicted and a gold set of structures.
pub fn group_f1(table: &GroupTable, predicted: &[&str], gold: &[&str]) -> Result<f64, MoleculeParseError> {
    let p = set_groups(table, predicted.iter().copied())?;
    let g = set_groups(table, gold.iter().copied())?;
    Ok(set_f1(&p, &g))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn groups(smiles: &str) -> Vec<String> {
        functional_groups(&parse_smiles(smiles).unwrap()).into_iter().collect()
    }

    #[test]
    fn builtin_table_has_eighteen_labels() {
        assert_eq!(GroupTable::builtin().labels().count(), 18);
    }

    #[test]
    fn simple_molecules() {
        assert_eq!(groups("CCO"), ["hydroxyl"]);
        assert_eq!(groups("CC(=O)O"), ["carboxylic_acid"]);
        assert_eq!(groups("CCc1cnccn1"), ["aromatic_ring", "pyrazine"]);
        assert_eq!(groups("CC(=O)C"), ["ketone"]);
        assert_eq!(groups("CC#N"), ["nitrile"]);
        assert_eq!(groups("CC#C"), ["alkyne"]);
        assert_eq!(groups("CCOCC"), ["ether"]);
        assert_eq!(groups("CCN"), ["amine"]);
        assert_eq!(groups("CSSC"), ["disulfide"]);
        assert_eq!(groups("CCCl"), ["halide"]);
        assert_eq!(groups("C[N+](=O)[O-]"), ["nitro"]);
        assert_eq!(groups("CN(=O)=O"), ["nitro"]);
        assert_eq!(groups("O=CO"), ["carboxylic_acid"]);
        assert_eq!(groups("O=COCC"), ["ester"]);
        assert_eq!(groups("CC(=O)[O-]"), ["carboxylic_acid"]);
        assert_eq!(groups("Oc1ccccc1"), ["aromatic_ring", "hydroxyl"]);
        assert_eq!(groups("O=C1CCCO1"), ["ester"]);
    }

    #[test]
    fn acid_hides_hydroxyl_at_same_site() {
        let g = parse_smiles("CC(=O)O").unwrap();
        let ms = GroupTable::builtin().matches(&g);
        let hyd = ms.iter().find(|m| m.label == "hydroxyl").unwrap();
        assert_eq!(hyd.suppressed_by.as_deref(), Some("carboxylic_acid"));
        // An unrelated hydroxyl in the same molecule survives.
        assert_eq!(groups("OCC(=O)O"), ["carboxylic_acid", "hydroxyl"]);
    }

    #[test]
    fn f1_formula() {
        let a: BTreeSet<&str> = ["hydroxyl", "ester"].into();
        let b: BTreeSet<&str> = ["hydroxyl", "carbonyl", "ester"].into();
        assert!((set_f1(&a, &b) - 0.8).abs() < 1e-12);
        assert_eq!(set_f1(&a, &a), 1.0);
        let c: BTreeSet<&str> = ["thiol"].into();
        assert_eq!(set_f1(&a, &c), 0.0);
        let e = BTreeSet::<&str>::new();
        assert_eq!(set_f1(&e, &e), 1.0);
        assert_eq!(set_f1(&a, &e), 0.0);
    }

    #[test]
    fn f1_over_structures_unions_groups() {
        let t = GroupTable::builtin();
        assert_eq!(group_f1(t, &["CCO", "CC(=O)OCC"], &["CCO", "CC(=O)OCC"]).unwrap(), 1.0);
        // {hydroxyl, ester} vs {hydroxyl, ester, ketone}
        let f = group_f1(t, &["CCO", "CC(=O)OCC"], &["CCO", "CC(=O)OCC", "CC(=O)C"]).unwrap();
        assert!((f - 0.8).abs() < 1e-12);
        let err = group_f1(t, &["C1CC"], &["CCO"]).unwrap_err();
        assert_eq!(err.molecule, "C1CC");
    }

    #[test]
    fn table_validation() {
        assert!(GroupTable::from_json(r#"{"version":1,"groups":[{"label":"x","patterns":["C"],"suppresses":["y"]}]}"#)
            .is_err());
        assert!(GroupTable::from_json(r#"{"version":1,"groups":[{"label":"x","patterns":["C("]}]}"#).is_err());
        let t = GroupTable::from_json(r#"{"version":2,"groups":[{"label":"carbon","patterns":["[#6]"]}]}"#).unwrap();
        assert_eq!(t.functional_groups(&parse_smiles("CO").unwrap()), BTreeSet::from(["carbon".to_string()]));
    }
}
