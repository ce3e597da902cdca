use super::element;
use serde::Serialize;
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to an atom's bond-order sum; aromatic bonds count as 1
    /// and the atom's aromaticity adds the extra unit separately.
    pub fn valence_units(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Atom {
    /// Atomic number; 0 for a wildcard.
    pub element: u8,
    pub aromatic: bool,
    pub charge: i8,
    /// Total attached hydrogens (explicit in brackets, implicit otherwise).
    pub hydrogens: u8,
}

impl Atom {
    pub fn symbol(&self) -> &'static str {
        element::symbol(self.element)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

/// Heavy-atom molecular graph with ring membership derived at construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MolGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    #[serde(skip)]
    adjacency: Vec<Vec<usize>>,
    ring_bond: Vec<bool>,
    ring_atom: Vec<bool>,
}

impl MolGraph {
    /// Bonds must reference valid atoms and be free of self-loops and duplicates.
    pub(crate) fn new(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Self {
        let mut adjacency = vec![Vec::new(); atoms.len()];
        for (i, b) in bonds.iter().enumerate() {
            debug_assert!(b.a != b.b && b.a < atoms.len() && b.b < atoms.len());
            adjacency[b.a].push(i);
            adjacency[b.b].push(i);
        }
        let ring_bond = find_ring_bonds(atoms.len(), &bonds, &adjacency);
        let mut ring_atom = vec![false; atoms.len()];
        for (b, &r) in bonds.iter().zip(&ring_bond) {
            if r {
                ring_atom[b.a] = true;
                ring_atom[b.b] = true;
            }
        }
        Self { atoms, bonds, adjacency, ring_bond, ring_atom }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    /// Indices of bonds incident to `atom`.
    pub fn bonds_of(&self, atom: usize) -> &[usize] {
        &self.adjacency[atom]
    }

    pub fn neighbors(&self, atom: usize) -> impl Iterator<Item = (usize, BondOrder)> + '_ {
        self.adjacency[atom].iter().map(move |&bi| {
            let b = &self.bonds[bi];
            (b.other(atom), b.order)
        })
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<BondOrder> {
        self.adjacency[a].iter().map(|&bi| &self.bonds[bi]).find(|bond| bond.other(a) == b).map(|bond| bond.order)
    }

    /// Heavy-atom degree.
    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    /// Bond-order sum including hydrogens, aromatic atoms counting one
    /// extra unit.
    pub fn valence(&self, atom: usize) -> usize {
        let a = &self.atoms[atom];
        let bonds: usize = self.neighbors(atom).map(|(_, o)| o.valence_units() as usize).sum();
        bonds + a.hydrogens as usize + usize::from(a.aromatic)
    }

    pub fn is_ring_atom(&self, atom: usize) -> bool {
        self.ring_atom[atom]
    }

    pub fn is_ring_bond(&self, bond: usize) -> bool {
        self.ring_bond[bond]
    }

    /// Number of independent rings (cyclomatic number).
    pub fn ring_count(&self) -> usize {
        let components = self.components();
        self.bonds.len() + components - self.atoms.len()
    }

    pub fn components(&self) -> usize {
        let mut seen = vec![false; self.atoms.len()];
        let mut count = 0;
        for start in 0..self.atoms.len() {
            if seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(u) = stack.pop() {
                for (v, _) in self.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        count
    }

    /// Size of the smallest ring through `atom`, if it is in a ring.
    pub fn smallest_ring_size(&self, atom: usize) -> Option<usize> {
        self.adjacency[atom]
            .iter()
            .filter(|&&bi| self.ring_bond[bi])
            .filter_map(|&bi| {
                let b = self.bonds[bi];
                self.shortest_path_without(b.a, b.b, bi).map(|d| d + 1)
            })
            .min()
    }

    fn shortest_path_without(&self, from: usize, to: usize, skip_bond: usize) -> Option<usize> {
        let mut dist = vec![usize::MAX; self.atoms.len()];
        let mut queue = VecDeque::from([from]);
        dist[from] = 0;
        while let Some(u) = queue.pop_front() {
            if u == to {
                return Some(dist[u]);
            }
            for &bi in &self.adjacency[u] {
                if bi == skip_bond {
                    continue;
                }
                let v = self.bonds[bi].other(u);
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        None
    }
}

/// A bond lies on a ring iff it is not a bridge.
fn find_ring_bonds(n: usize, bonds: &[Bond], adjacency: &[Vec<usize>]) -> Vec<bool> {
    let mut ring = vec![true; bonds.len()];
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut timer = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // Iterative DFS: (atom, bond used to enter, next adjacency position).
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(top) = stack.last_mut() {
            let (u, via) = (top.0, top.1);
            if top.2 < adjacency[u].len() {
                let bi = adjacency[u][top.2];
                top.2 += 1;
                if bi == via {
                    continue;
                }
                let v = bonds[bi].other(u);
                if disc[v] == usize::MAX {
                    disc[v] = timer;
                    low[v] = timer;
                    timer += 1;
                    stack.push((v, bi, 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let Some(&(parent, _, _)) = stack.last() {
                    low[parent] = low[parent].min(low[u]);
                    if low[u] > disc[parent] {
                        ring[via] = false;
                    }
                }
            }
        }
    }
    ring
}
