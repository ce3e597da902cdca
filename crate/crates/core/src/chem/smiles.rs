//! Parser for the practical SMILES subset used by flavor-molecule records:
//! organic-subset and bracket atoms (isotope, H count, charge, atom class),
//! branches, ring closures `0-9` and `%nn`, aromatic lowercase atoms and
//! the `.` separator. Stereo markers are accepted and dropped.

use super::element;
use super::graph::{Atom, Bond, BondOrder, MolGraph};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SmilesErrorKind {
    #[error("empty input")]
    Empty,
    #[error("unclosed '['")]
    UnclosedBracket,
    #[error("unbalanced parenthesis")]
    UnbalancedParenthesis,
    #[error("ring closure {0} is never closed")]
    UnpairedRing(u32),
    #[error("unknown element {0:?}")]
    UnknownElement(String),
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("bond or ring closure with no preceding atom")]
    NoPrecedingAtom,
    #[error("bond is not followed by an atom")]
    DanglingBond,
    #[error("ring closure bond orders disagree")]
    RingBondMismatch,
    #[error("atom bonded to itself")]
    SelfBond,
    #[error("duplicate bond between the same atoms")]
    DuplicateBond,
    #[error("element {0} cannot be aromatic")]
    InvalidAromatic(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("SMILES error at offset {offset}: {kind}")]
pub struct SmilesError {
    pub offset: usize,
    pub kind: SmilesErrorKind,
}

fn err(offset: usize, kind: SmilesErrorKind) -> SmilesError {
    SmilesError { offset, kind }
}

struct PendingAtom {
    atom: Atom,
    /// Organic-subset atoms get implicit hydrogens after parsing.
    implicit_h: bool,
}

struct OpenRing {
    atom: usize,
    bond: Option<BondOrder>,
    offset: usize,
}

pub fn parse_smiles(s: &str) -> Result<MolGraph, SmilesError> {
    Parser::new(s).parse()
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    atoms: Vec<PendingAtom>,
    bonds: Vec<Bond>,
}

impl<'a> Parser<'a> {
    fn new(s: &'a str) -> Self {
        Self { src: s.as_bytes(), pos: 0, atoms: Vec::new(), bonds: Vec::new() }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn parse(mut self) -> Result<MolGraph, SmilesError> {
        if self.src.iter().all(u8::is_ascii_whitespace) {
            return Err(err(0, SmilesErrorKind::Empty));
        }
        let mut prev: Option<usize> = None;
        let mut pending_bond: Option<(BondOrder, usize)> = None;
        let mut branches: Vec<(usize, usize)> = Vec::new();
        let mut rings: BTreeMap<u32, OpenRing> = BTreeMap::new();

        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                b'(' => {
                    let atom = prev.ok_or_else(|| err(start, SmilesErrorKind::NoPrecedingAtom))?;
                    if pending_bond.is_some() {
                        return Err(err(start, SmilesErrorKind::DanglingBond));
                    }
                    branches.push((atom, start));
                    self.pos += 1;
                }
                b')' => {
                    if pending_bond.is_some() {
                        return Err(err(start, SmilesErrorKind::DanglingBond));
                    }
                    let (atom, _) = branches.pop().ok_or_else(|| err(start, SmilesErrorKind::UnbalancedParenthesis))?;
                    prev = Some(atom);
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if prev.is_none() {
                        return Err(err(start, SmilesErrorKind::NoPrecedingAtom));
                    }
                    let order = match c {
                        b'=' => BondOrder::Double,
                        b'#' => BondOrder::Triple,
                        b':' => BondOrder::Aromatic,
                        _ => BondOrder::Single,
                    };
                    pending_bond = Some((order, start));
                    self.pos += 1;
                }
                b'.' => {
                    if pending_bond.is_some() {
                        return Err(err(start, SmilesErrorKind::DanglingBond));
                    }
                    prev = None;
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => {
                    let atom = prev.ok_or_else(|| err(start, SmilesErrorKind::NoPrecedingAtom))?;
                    let digit = self.ring_number()?;
                    let bond = pending_bond.take().map(|(o, _)| o);
                    match rings.remove(&digit) {
                        None => {
                            rings.insert(digit, OpenRing { atom, bond, offset: start });
                        }
                        Some(open) => {
                            let order = match (open.bond, bond) {
                                (Some(x), Some(y)) if x != y => {
                                    return Err(err(start, SmilesErrorKind::RingBondMismatch))
                                }
                                (Some(x), _) | (None, Some(x)) => x,
                                (None, None) => self.default_order(open.atom, atom),
                            };
                            self.add_bond(open.atom, atom, order, start)?;
                        }
                    }
                }
                b'[' => {
                    let idx = self.bracket_atom()?;
                    self.connect(prev, idx, pending_bond.take(), start)?;
                    prev = Some(idx);
                }
                _ if c.is_ascii_alphabetic() || c == b'*' => {
                    let idx = self.organic_atom()?;
                    self.connect(prev, idx, pending_bond.take(), start)?;
                    prev = Some(idx);
                }
                _ => return Err(err(start, SmilesErrorKind::UnexpectedChar(c as char))),
            }
        }

        if let Some((_, offset)) = pending_bond {
            return Err(err(offset, SmilesErrorKind::DanglingBond));
        }
        if let Some(&(_, offset)) = branches.first() {
            return Err(err(offset, SmilesErrorKind::UnbalancedParenthesis));
        }
        if let Some((&digit, open)) = rings.iter().min_by_key(|(_, r)| r.offset) {
            return Err(err(open.offset, SmilesErrorKind::UnpairedRing(digit)));
        }

        Ok(self.finish())
    }

    fn ring_number(&mut self) -> Result<u32, SmilesError> {
        let start = self.pos;
        if self.peek() == Some(b'%') {
            let digits = self.src.get(self.pos + 1..self.pos + 3);
            match digits {
                Some(d) if d.iter().all(u8::is_ascii_digit) => {
                    self.pos += 3;
                    Ok(((d[0] - b'0') * 10 + (d[1] - b'0')) as u32)
                }
                _ => Err(err(start, SmilesErrorKind::UnexpectedChar('%'))),
            }
        } else {
            let d = self.src[self.pos] - b'0';
            self.pos += 1;
            Ok(d as u32)
        }
    }

    fn default_order(&self, a: usize, b: usize) -> BondOrder {
        if self.atoms[a].atom.aromatic && self.atoms[b].atom.aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        }
    }

    fn connect(
        &mut self,
        prev: Option<usize>,
        idx: usize,
        bond: Option<(BondOrder, usize)>,
        offset: usize,
    ) -> Result<(), SmilesError> {
        if let Some(p) = prev {
            let order = bond.map(|(o, _)| o).unwrap_or_else(|| self.default_order(p, idx));
            self.add_bond(p, idx, order, offset)?;
        }
        Ok(())
    }

    fn add_bond(&mut self, a: usize, b: usize, order: BondOrder, offset: usize) -> Result<(), SmilesError> {
        if a == b {
            return Err(err(offset, SmilesErrorKind::SelfBond));
        }
        if self.bonds.iter().any(|x| (x.a == a && x.b == b) || (x.a == b && x.b == a)) {
            return Err(err(offset, SmilesErrorKind::DuplicateBond));
        }
        self.bonds.push(Bond { a, b, order });
        Ok(())
    }

    fn push_atom(&mut self, atom: Atom, implicit_h: bool) -> usize {
        self.atoms.push(PendingAtom { atom, implicit_h });
        self.atoms.len() - 1
    }

    fn organic_atom(&mut self) -> Result<usize, SmilesError> {
        let start = self.pos;
        let c = self.src[self.pos];
        let two = self.src.get(self.pos..self.pos + 2);
        let (symbol, aromatic, len) = match (c, two) {
            (b'C', Some(b"Cl")) => ("Cl", false, 2),
            (b'B', Some(b"Br")) => ("Br", false, 2),
            (b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I', _) => {
                (std::str::from_utf8(&self.src[self.pos..self.pos + 1]).unwrap(), false, 1)
            }
            (b'b', _) => ("B", true, 1),
            (b'c', _) => ("C", true, 1),
            (b'n', _) => ("N", true, 1),
            (b'o', _) => ("O", true, 1),
            (b'p', _) => ("P", true, 1),
            (b's', _) => ("S", true, 1),
            (b'*', _) => ("*", false, 1),
            _ => {
                let end = (self.pos + 2).min(self.src.len());
                let tok = String::from_utf8_lossy(&self.src[self.pos..end]).into_owned();
                return Err(err(start, SmilesErrorKind::UnknownElement(tok)));
            }
        };
        self.pos += len;
        let element = element::atomic_number(symbol).expect("organic subset symbol");
        Ok(self.push_atom(Atom { element, aromatic, charge: 0, hydrogens: 0 }, true))
    }

    fn bracket_atom(&mut self) -> Result<usize, SmilesError> {
        let open = self.pos;
        let close = self.src[open..]
            .iter()
            .position(|&c| c == b']')
            .map(|p| open + p)
            .ok_or_else(|| err(open, SmilesErrorKind::UnclosedBracket))?;
        if self.src[open + 1..close].contains(&b'[') {
            return Err(err(open, SmilesErrorKind::UnclosedBracket));
        }
        let body = &self.src[open + 1..close];
        let mut i = 0;
        let at = |i: usize| body.get(i).copied();

        while at(i).is_some_and(|c| c.is_ascii_digit()) {
            i += 1; // isotope, ignored
        }

        let sym_start = open + 1 + i;
        let (element, aromatic) = match at(i) {
            Some(b'*') => {
                i += 1;
                (0, false)
            }
            Some(c) if c.is_ascii_uppercase() => {
                let two = at(i + 1).filter(|n| n.is_ascii_lowercase()).map(|n| format!("{}{}", c as char, n as char));
                match two.as_deref().and_then(element::atomic_number) {
                    Some(n) => {
                        i += 2;
                        (n, false)
                    }
                    None => {
                        let one = (c as char).to_string();
                        let n = element::atomic_number(&one)
                            .ok_or_else(|| err(sym_start, SmilesErrorKind::UnknownElement(one)))?;
                        i += 1;
                        (n, false)
                    }
                }
            }
            Some(c) if c.is_ascii_lowercase() => {
                let two = at(i + 1).filter(|n| n.is_ascii_lowercase()).map(|n| [c, n]);
                let (sym, len) = match two {
                    Some(t) if &t == b"se" || &t == b"as" => (String::from_utf8(t.to_vec()).unwrap(), 2),
                    _ => ((c as char).to_string(), 1),
                };
                let upper = format!("{}{}", sym[..1].to_ascii_uppercase(), &sym[1..]);
                let n = element::atomic_number(&upper)
                    .ok_or_else(|| err(sym_start, SmilesErrorKind::UnknownElement(sym.clone())))?;
                if !element::can_be_aromatic(n) {
                    return Err(err(sym_start, SmilesErrorKind::InvalidAromatic(sym)));
                }
                i += len;
                (n, true)
            }
            Some(c) => return Err(err(sym_start, SmilesErrorKind::UnexpectedChar(c as char))),
            None => return Err(err(sym_start, SmilesErrorKind::UnknownElement(String::new()))),
        };

        // Chirality: '@', '@@', or '@TH1'-style classes.
        while at(i) == Some(b'@') {
            i += 1;
        }
        if at(i).is_some_and(|c| c.is_ascii_uppercase()) && at(i) != Some(b'H') {
            while at(i).is_some_and(|c| c.is_ascii_uppercase()) {
                i += 1;
            }
            while at(i).is_some_and(|c| c.is_ascii_digit()) {
                i += 1;
            }
        }

        let mut hydrogens = 0u8;
        if at(i) == Some(b'H') {
            i += 1;
            hydrogens = 1;
            if let Some(d) = at(i).filter(u8::is_ascii_digit) {
                hydrogens = d - b'0';
                i += 1;
            }
        }

        let mut charge: i8 = 0;
        if let Some(sign @ (b'+' | b'-')) = at(i) {
            let unit: i8 = if sign == b'+' { 1 } else { -1 };
            i += 1;
            let mut digits = 0i8;
            let mut has_digits = false;
            while let Some(d) = at(i).filter(u8::is_ascii_digit) {
                digits = digits.saturating_mul(10).saturating_add((d - b'0') as i8);
                has_digits = true;
                i += 1;
            }
            if has_digits {
                charge = unit * digits;
            } else {
                charge = unit;
                while at(i) == Some(sign) {
                    charge += unit;
                    i += 1;
                }
            }
        }

        if at(i) == Some(b':') {
            i += 1;
            while at(i).is_some_and(|c| c.is_ascii_digit()) {
                i += 1;
            }
        }

        if let Some(c) = at(i) {
            return Err(err(open + 1 + i, SmilesErrorKind::UnexpectedChar(c as char)));
        }
        self.pos = close + 1;
        Ok(self.push_atom(Atom { element, aromatic, charge, hydrogens }, false))
    }

    fn finish(self) -> MolGraph {
        let mut atoms: Vec<Atom> = Vec::with_capacity(self.atoms.len());
        for (i, p) in self.atoms.iter().enumerate() {
            let mut atom = p.atom.clone();
            if p.implicit_h {
                let used: u32 = self
                    .bonds
                    .iter()
                    .filter(|b| b.a == i || b.b == i)
                    .map(|b| b.order.valence_units() as u32)
                    .sum::<u32>()
                    + u32::from(atom.aromatic);
                atom.hydrogens = element::default_valences(atom.element)
                    .iter()
                    .map(|&v| v as u32)
                    .find(|&v| v >= used)
                    .map_or(0, |v| (v - used) as u8);
            }
            atoms.push(atom);
        }
        MolGraph::new(atoms, self.bonds)
    }
}
