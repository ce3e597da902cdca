//! A SMARTS subset for functional-group patterns.
//!
//! Atoms: organic symbols (`C`, `c`, `N`, `Cl`, ...), `*`, `a`, `A`, or a
//! bracket expression built from primitives joined by `!`, `&`
//! (or juxtaposition), `,` and `;`, in decreasing precedence:
//!
//! | primitive | meaning                                     |
//! |-----------|---------------------------------------------|
//! | `C`, `c`  | element, aliphatic / aromatic               |
//! | `#n`      | atomic number                               |
//! | `a`, `A`  | aromatic / aliphatic                        |
//! | `Hn`      | total hydrogen count                        |
//! | `Dn`      | heavy-atom degree                           |
//! | `Xn`      | total connections including hydrogens       |
//! | `vn`      | total bond-order valence                    |
//! | `R`, `R0` | in a ring / not in a ring                   |
//! | `+n`, `-n`, `+0` | formal charge                        |
//!
//! A trailing `:n` inside a bracket marks the atom as part of the match
//! site; patterns without marks use every atom as the site. Bonds: `-`,
//! `=`, `#`, `:`, `~` (any); unspecified means single or aromatic. Branches
//! and ring closures (`1`-`9`) work as in SMILES.

use super::element;
use super::graph::{BondOrder, MolGraph};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq)]
enum AtomExpr {
    Any,
    Element { number: u8, aromatic: Option<bool> },
    Aromatic(bool),
    HCount(u8),
    Degree(u8),
    Connections(u8),
    Valence(u8),
    InRing(bool),
    Charge(i8),
    Not(Box<AtomExpr>),
    And(Vec<AtomExpr>),
    Or(Vec<AtomExpr>),
}

impl AtomExpr {
    fn matches(&self, g: &MolGraph, i: usize) -> bool {
        let a = g.atom(i);
        match self {
            AtomExpr::Any => true,
            AtomExpr::Element { number, aromatic } => {
                a.element == *number && aromatic.map_or(true, |ar| ar == a.aromatic)
            }
            AtomExpr::Aromatic(ar) => a.aromatic == *ar,
            AtomExpr::HCount(n) => a.hydrogens == *n,
            AtomExpr::Degree(n) => g.degree(i) == *n as usize,
            AtomExpr::Connections(n) => g.degree(i) + a.hydrogens as usize == *n as usize,
            AtomExpr::Valence(n) => g.valence(i) == *n as usize,
            AtomExpr::InRing(r) => g.is_ring_atom(i) == *r,
            AtomExpr::Charge(c) => a.charge == *c,
            AtomExpr::Not(e) => !e.matches(g, i),
            AtomExpr::And(es) => es.iter().all(|e| e.matches(g, i)),
            AtomExpr::Or(es) => es.iter().any(|e| e.matches(g, i)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum BondExpr {
    SingleOrAromatic,
    Exactly(BondOrder),
    Any,
}

impl BondExpr {
    fn matches(self, order: BondOrder) -> bool {
        match self {
            BondExpr::SingleOrAromatic => matches!(order, BondOrder::Single | BondOrder::Aromatic),
            BondExpr::Exactly(o) => o == order,
            BondExpr::Any => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct PatternAtom {
    expr: AtomExpr,
    site: bool,
}

/// A compiled, connected substructure pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    source: String,
    atoms: Vec<PatternAtom>,
    bonds: Vec<(usize, usize, BondExpr)>,
    /// Atom visiting order and, for each non-root, the bond to an earlier atom.
    order: Vec<(usize, Option<usize>)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("pattern {pattern:?} at offset {offset}: {message}")]
pub struct PatternError {
    pub pattern: String,
    pub offset: usize,
    pub message: String,
}

/// One embedding of a pattern: the site atoms and all matched atoms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PatternMatch {
    pub site: BTreeSet<usize>,
    pub atoms: BTreeSet<usize>,
}

impl Pattern {
    pub fn parse(src: &str) -> Result<Self, PatternError> {
        PatternParser { src: src.as_bytes(), text: src, pos: 0 }.parse()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// All distinct embeddings, deduplicated by (site, atom set).
    pub fn find_all(&self, g: &MolGraph) -> Vec<PatternMatch> {
        let mut found = BTreeSet::new();
        let mut mapping = vec![usize::MAX; self.atoms.len()];
        let mut used = vec![false; g.atoms().len()];
        self.extend(g, 0, &mut mapping, &mut used, &mut found);
        found.into_iter().collect()
    }

    fn extend(
        &self,
        g: &MolGraph,
        step: usize,
        mapping: &mut [usize],
        used: &mut [bool],
        found: &mut BTreeSet<PatternMatch>,
    ) {
        if step == self.order.len() {
            let atoms: BTreeSet<usize> = mapping.iter().copied().collect();
            let site = self.atoms.iter().zip(mapping.iter()).filter(|(pa, _)| pa.site).map(|(_, &m)| m).collect();
            found.insert(PatternMatch { site, atoms });
            return;
        }
        let (p, via) = self.order[step];
        let candidates: Vec<usize> = match via {
            None => (0..g.atoms().len()).collect(),
            Some(bi) => {
                let (x, y, _) = self.bonds[bi];
                let anchor = mapping[if x == p { y } else { x }];
                g.neighbors(anchor).map(|(n, _)| n).collect()
            }
        };
        for t in candidates {
            if used[t] || !self.atoms[p].expr.matches(g, t) {
                continue;
            }
            // Every pattern bond from p to an already-mapped atom must exist.
            let consistent = self.bonds.iter().all(|&(x, y, be)| {
                let other = if x == p {
                    y
                } else if y == p {
                    x
                } else {
                    return true;
                };
                let mo = mapping[other];
                if mo == usize::MAX {
                    return true;
                }
                g.bond_between(t, mo).is_some_and(|o| be.matches(o))
            });
            if !consistent {
                continue;
            }
            mapping[p] = t;
            used[t] = true;
            self.extend(g, step + 1, mapping, used, found);
            used[t] = false;
            mapping[p] = usize::MAX;
        }
    }
}

struct PatternParser<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
}

impl<'a> PatternParser<'a> {
    fn fail<T>(&self, offset: usize, message: impl Into<String>) -> Result<T, PatternError> {
        Err(PatternError { pattern: self.text.to_string(), offset, message: message.into() })
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn parse(mut self) -> Result<Pattern, PatternError> {
        let mut atoms: Vec<PatternAtom> = Vec::new();
        let mut bonds: Vec<(usize, usize, BondExpr)> = Vec::new();
        let mut prev: Option<usize> = None;
        let mut pending: Option<BondExpr> = None;
        let mut branches = Vec::new();
        let mut rings: [Option<(usize, Option<BondExpr>)>; 10] = Default::default();

        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                b'(' => {
                    match prev {
                        Some(p) => branches.push(p),
                        None => return self.fail(start, "branch without atom"),
                    }
                    self.pos += 1;
                }
                b')' => {
                    prev = match branches.pop() {
                        Some(p) => Some(p),
                        None => return self.fail(start, "unbalanced ')'"),
                    };
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'~' => {
                    pending = Some(match c {
                        b'-' => BondExpr::Exactly(BondOrder::Single),
                        b'=' => BondExpr::Exactly(BondOrder::Double),
                        b'#' => BondExpr::Exactly(BondOrder::Triple),
                        b':' => BondExpr::Exactly(BondOrder::Aromatic),
                        _ => BondExpr::Any,
                    });
                    self.pos += 1;
                }
                b'0'..=b'9' => {
                    let Some(p) = prev else {
                        return self.fail(start, "ring closure without atom");
                    };
                    let d = (c - b'0') as usize;
                    let bond = pending.take();
                    match rings[d].take() {
                        None => rings[d] = Some((p, bond)),
                        Some((q, b0)) => {
                            bonds.push((q, p, bond.or(b0).unwrap_or(BondExpr::SingleOrAromatic)));
                        }
                    }
                    self.pos += 1;
                }
                _ => {
                    let atom = if c == b'[' { self.bracket()? } else { self.bare()? };
                    atoms.push(atom);
                    let idx = atoms.len() - 1;
                    if let Some(p) = prev {
                        bonds.push((p, idx, pending.take().unwrap_or(BondExpr::SingleOrAromatic)));
                    } else if idx > 0 {
                        return self.fail(start, "disconnected pattern");
                    }
                    prev = Some(idx);
                }
            }
        }
        if !branches.is_empty() {
            return self.fail(self.src.len(), "unbalanced '('");
        }
        if rings.iter().any(Option::is_some) {
            return self.fail(self.src.len(), "unclosed ring");
        }
        if atoms.is_empty() {
            return self.fail(0, "empty pattern");
        }
        if !atoms.iter().any(|a| a.site) {
            for a in &mut atoms {
                a.site = true;
            }
        }

        // Breadth-first visiting order so each later atom hangs off a mapped one.
        let mut order = vec![(0usize, None)];
        let mut seen = vec![false; atoms.len()];
        seen[0] = true;
        let mut head = 0;
        while head < order.len() {
            let u = order[head].0;
            head += 1;
            for (bi, &(x, y, _)) in bonds.iter().enumerate() {
                let v = if x == u {
                    y
                } else if y == u {
                    x
                } else {
                    continue;
                };
                if !seen[v] {
                    seen[v] = true;
                    order.push((v, Some(bi)));
                }
            }
        }

        Ok(Pattern { source: self.text.to_string(), atoms, bonds, order })
    }

    fn bare(&mut self) -> Result<PatternAtom, PatternError> {
        let start = self.pos;
        let c = self.src[self.pos];
        let two = self.src.get(self.pos..self.pos + 2);
        let (expr, len) = match (c, two) {
            (b'C', Some(b"Cl")) => (elem(17, Some(false)), 2),
            (b'B', Some(b"Br")) => (elem(35, Some(false)), 2),
            (b'*', _) => (AtomExpr::Any, 1),
            (b'a', _) => (AtomExpr::Aromatic(true), 1),
            (b'A', _) => (AtomExpr::Aromatic(false), 1),
            (b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I', _) => {
                (elem(element::atomic_number(&(c as char).to_string()).unwrap(), Some(false)), 1)
            }
            (b'b' | b'c' | b'n' | b'o' | b'p' | b's', _) => {
                (elem(element::atomic_number(&(c.to_ascii_uppercase() as char).to_string()).unwrap(), Some(true)), 1)
            }
            _ => return self.fail(start, format!("unexpected {:?}", c as char)),
        };
        self.pos += len;
        Ok(PatternAtom { expr, site: false })
    }

    fn bracket(&mut self) -> Result<PatternAtom, PatternError> {
        let open = self.pos;
        let Some(close) = self.src[open..].iter().position(|&c| c == b']').map(|p| open + p) else {
            return self.fail(open, "unclosed '['");
        };
        let mut body_end = close;
        let mut site = false;
        // Trailing ":n" site mark.
        if let Some(colon) = self.src[open + 1..close].iter().rposition(|&c| c == b':') {
            let colon = open + 1 + colon;
            if colon + 1 < close && self.src[colon + 1..close].iter().all(u8::is_ascii_digit) {
                body_end = colon;
                site = true;
            }
        }
        self.pos = open + 1;
        let expr = self.low_and(body_end)?;
        if self.pos != body_end {
            return self.fail(self.pos, "trailing characters in bracket");
        }
        self.pos = close + 1;
        Ok(PatternAtom { expr, site })
    }

    fn low_and(&mut self, end: usize) -> Result<AtomExpr, PatternError> {
        let mut terms = vec![self.or(end)?];
        while self.pos < end && self.src[self.pos] == b';' {
            self.pos += 1;
            terms.push(self.or(end)?);
        }
        Ok(collapse(terms, AtomExpr::And))
    }

    fn or(&mut self, end: usize) -> Result<AtomExpr, PatternError> {
        let mut terms = vec![self.high_and(end)?];
        while self.pos < end && self.src[self.pos] == b',' {
            self.pos += 1;
            terms.push(self.high_and(end)?);
        }
        Ok(collapse(terms, AtomExpr::Or))
    }

    fn high_and(&mut self, end: usize) -> Result<AtomExpr, PatternError> {
        let mut terms = vec![self.unary(end)?];
        while self.pos < end && !matches!(self.src[self.pos], b';' | b',') {
            if self.src[self.pos] == b'&' {
                self.pos += 1;
            }
            terms.push(self.unary(end)?);
        }
        Ok(collapse(terms, AtomExpr::And))
    }

    fn unary(&mut self, end: usize) -> Result<AtomExpr, PatternError> {
        if self.pos < end && self.src[self.pos] == b'!' {
            self.pos += 1;
            return Ok(AtomExpr::Not(Box::new(self.unary(end)?)));
        }
        self.primitive(end)
    }

    fn number(&mut self, end: usize) -> Option<u8> {
        let start = self.pos;
        while self.pos < end && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).ok()?.parse().ok()
    }

    fn primitive(&mut self, end: usize) -> Result<AtomExpr, PatternError> {
        let start = self.pos;
        if start >= end {
            return self.fail(start, "expected atom primitive");
        }
        let c = self.src[start];
        self.pos += 1;
        let expr = match c {
            b'*' => AtomExpr::Any,
            b'a' => AtomExpr::Aromatic(true),
            b'A' => AtomExpr::Aromatic(false),
            b'#' => match self.number(end) {
                Some(n) => elem(n, None),
                None => return self.fail(start, "expected atomic number after '#'"),
            },
            b'H' => AtomExpr::HCount(self.number(end).unwrap_or(1)),
            b'D' => AtomExpr::Degree(self.number(end).unwrap_or(1)),
            b'X' => AtomExpr::Connections(self.number(end).unwrap_or(1)),
            b'v' => AtomExpr::Valence(self.number(end).unwrap_or(1)),
            b'R' => AtomExpr::InRing(self.number(end).map_or(true, |n| n > 0)),
            b'+' | b'-' => {
                let sign: i8 = if c == b'+' { 1 } else { -1 };
                AtomExpr::Charge(sign * self.number(end).map_or(1, |n| n as i8))
            }
            b'A'..=b'Z' => {
                let next = self.src.get(self.pos).copied().filter(|n| self.pos < end && n.is_ascii_lowercase());
                let two = next.and_then(|n| element::atomic_number(&format!("{}{}", c as char, n as char)));
                match two {
                    Some(n) => {
                        self.pos += 1;
                        elem(n, Some(false))
                    }
                    None => match element::atomic_number(&(c as char).to_string()) {
                        Some(n) => elem(n, Some(false)),
                        None => return self.fail(start, format!("unknown element {:?}", c as char)),
                    },
                }
            }
            b'b' | b'c' | b'n' | b'o' | b'p' | b's' => {
                elem(element::atomic_number(&(c.to_ascii_uppercase() as char).to_string()).unwrap(), Some(true))
            }
            _ => return self.fail(start, format!("unexpected {:?}", c as char)),
        };
        Ok(expr)
    }
}

fn elem(number: u8, aromatic: Option<bool>) -> AtomExpr {
    AtomExpr::Element { number, aromatic }
}

fn collapse(mut terms: Vec<AtomExpr>, join: fn(Vec<AtomExpr>) -> AtomExpr) -> AtomExpr {
    if terms.len() == 1 {
        terms.pop().unwrap()
    } else {
        join(terms)
    }
}
