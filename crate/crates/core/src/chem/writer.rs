use super::graph::{BondOrder, MolGraph};
use crate::rng::SeededRng;

/// Write `g` as SMILES, starting each component at a seeded random atom and
/// visiting neighbors in seeded random order. Every atom is bracketed with
/// its hydrogen count and charge, so re-parsing recovers the same graph up
/// to atom order.
pub fn write_smiles_randomized(g: &MolGraph, seed: u64) -> String {
    let n = g.atoms().len();
    let mut rng = SeededRng::new(seed);
    let neighbor_order: Vec<Vec<usize>> = (0..n)
        .map(|u| {
            let mut v: Vec<usize> = g.neighbors(u).map(|(x, _)| x).collect();
            v.sort_unstable();
            rng.shuffle(&mut v);
            v
        })
        .collect();
    let mut starts: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut starts);

    // Pass 1: DFS tree (children in visit order) and preorder.
    let mut visited = vec![false; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut roots = Vec::new();
    let mut rank = vec![usize::MAX; n];
    let mut counter = 0;
    for &s in &starts {
        if visited[s] {
            continue;
        }
        roots.push(s);
        let mut stack = vec![(s, usize::MAX)];
        while let Some((u, parent)) = stack.pop() {
            if visited[u] {
                continue;
            }
            visited[u] = true;
            rank[u] = counter;
            counter += 1;
            if parent != usize::MAX {
                children[parent].push(u);
            }
            for &v in neighbor_order[u].iter().rev() {
                if !visited[v] {
                    stack.push((v, u));
                }
            }
        }
    }
    // Ring-closure bonds are the non-tree bonds.
    let mut tree_edge = std::collections::BTreeSet::new();
    for (p, cs) in children.iter().enumerate() {
        for &c in cs {
            tree_edge.insert((p.min(c), p.max(c)));
        }
    }

    let mut out = String::new();
    let mut open_digits: std::collections::BTreeMap<(usize, usize), u32> = Default::default();
    let mut free: Vec<u32> = Vec::new();
    let mut next_digit = 1u32;
    for (k, &root) in roots.iter().enumerate() {
        if k > 0 {
            out.push('.');
        }
        emit(
            g,
            root,
            &children,
            &neighbor_order,
            &rank,
            &tree_edge,
            &mut open_digits,
            &mut free,
            &mut next_digit,
            &mut out,
        );
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn emit(
    g: &MolGraph,
    u: usize,
    children: &[Vec<usize>],
    neighbor_order: &[Vec<usize>],
    rank: &[usize],
    tree_edge: &std::collections::BTreeSet<(usize, usize)>,
    open: &mut std::collections::BTreeMap<(usize, usize), u32>,
    free: &mut Vec<u32>,
    next: &mut u32,
    out: &mut String,
) {
    let a = g.atom(u);
    out.push('[');
    if a.aromatic {
        out.push_str(&a.symbol().to_ascii_lowercase());
    } else {
        out.push_str(a.symbol());
    }
    if a.hydrogens > 0 {
        out.push('H');
        if a.hydrogens > 1 {
            out.push_str(&a.hydrogens.to_string());
        }
    }
    match a.charge {
        0 => {}
        c if c > 0 => out.push_str(&format!("+{c}")),
        c => out.push_str(&format!("-{}", -c)),
    }
    out.push(']');

    for &v in &neighbor_order[u] {
        let key = (u.min(v), u.max(v));
        if tree_edge.contains(&key) {
            continue;
        }
        let order = g.bond_between(u, v).unwrap();
        if let Some(d) = open.remove(&key) {
            out.push_str(bond_symbol(g, u, v, order));
            push_digit(out, d);
            free.push(d);
            free.sort_unstable_by(|a, b| b.cmp(a));
        } else if rank[v] > rank[u] {
            let d = free.pop().unwrap_or_else(|| {
                let d = *next;
                *next += 1;
                d
            });
            open.insert(key, d);
            out.push_str(bond_symbol(g, u, v, order));
            push_digit(out, d);
        }
    }

    let kids = &children[u];
    for (i, &c) in kids.iter().enumerate() {
        let last = i + 1 == kids.len();
        if !last {
            out.push('(');
        }
        out.push_str(bond_symbol(g, u, c, g.bond_between(u, c).unwrap()));
        emit(g, c, children, neighbor_order, rank, tree_edge, open, free, next, out);
        if !last {
            out.push(')');
        }
    }
}

fn push_digit(out: &mut String, d: u32) {
    if d < 10 {
        out.push_str(&d.to_string());
    } else {
        out.push_str(&format!("%{d:02}"));
    }
}

fn bond_symbol(g: &MolGraph, u: usize, v: usize, order: BondOrder) -> &'static str {
    let both_aromatic = g.atom(u).aromatic && g.atom(v).aromatic;
    match order {
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic if both_aromatic => "",
        BondOrder::Aromatic => ":",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::smiles::parse_smiles;

    #[test]
    fn rewrites_reparse_to_same_size_graph() {
        for s in ["CCO", "c1ccccc1", "CC1=CCC(CC1)C(=C)C", "C1CC12CC2", "CCO.O", "c1ccccc1-c1ccccc1"] {
            let g = parse_smiles(s).unwrap();
            for seed in 0..20 {
                let w = write_smiles_randomized(&g, seed);
                let h = parse_smiles(&w).unwrap_or_else(|e| panic!("{s} -> {w}: {e}"));
                assert_eq!(h.atoms().len(), g.atoms().len(), "{w}");
                assert_eq!(h.bonds().len(), g.bonds().len(), "{w}");
                assert_eq!(h.ring_count(), g.ring_count(), "{w}");
                let mut ha: Vec<_> =
                    h.atoms().to_vec().into_iter().map(|a| (a.element, a.hydrogens, a.aromatic)).collect();
                let mut ga: Vec<_> =
                    g.atoms().to_vec().into_iter().map(|a| (a.element, a.hydrogens, a.aromatic)).collect();
                ha.sort();
                ga.sort();
                assert_eq!(ha, ga);
            }
        }
    }
}
