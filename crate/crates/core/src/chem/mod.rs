//! Molecular structures and the functional-group metric.
//!
//! [`parse_smiles`] turns a SMILES string into a [`MolGraph`];
//! [`GroupTable`] matches the functional-group patterns shipped in
//! `data/functional_groups.json` and resolves suppression, so a carboxylic
//! acid is reported as one group rather than hydroxyl plus carbonyl.

pub mod element;
mod graph;
mod groups;
mod pattern;
mod smiles;
mod writer;

pub use graph::{Atom, Bond, BondOrder, MolGraph};
pub use groups::{
    functional_groups, group_f1, set_f1, set_groups, FunctionalGroupSet, GroupDef, GroupMatch, GroupTable,
    GroupTableError, MoleculeParseError,
};
pub use pattern::{Pattern, PatternError, PatternMatch};
pub use smiles::{parse_smiles, SmilesError, SmilesErrorKind};
pub use writer::write_smiles_randomized;
