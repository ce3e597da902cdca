/// Element symbols in atomic-number order (index 0 is unused).
const SYMBOLS: &[&str] = &[
    "", "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K", "Ca",
    "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",
    "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba",
];

/// Atomic number 0 stands for the `*` wildcard atom.
pub fn atomic_number(symbol: &str) -> Option<u8> {
    if symbol == "*" {
        return Some(0);
    }
    SYMBOLS.iter().position(|s| !s.is_empty() && *s == symbol).map(|i| i as u8)
}

pub fn symbol(number: u8) -> &'static str {
    if number == 0 {
        "*"
    } else {
        SYMBOLS[number as usize]
    }
}

/// Elements that may appear as lowercase aromatic atoms.
pub fn can_be_aromatic(number: u8) -> bool {
    matches!(number, 5 | 6 | 7 | 8 | 15 | 16 | 33 | 34)
}

/// Standard valences used to fill implicit hydrogens on organic-subset atoms.
pub fn default_valences(number: u8) -> &'static [u8] {
    match number {
        5 => &[3],
        6 => &[4],
        7 => &[3],
        8 => &[2],
        15 => &[3, 5],
        16 => &[2, 4, 6],
        9 | 17 | 35 | 53 => &[1],
        _ => &[],
    }
}

/// Elements writable without brackets.
pub fn in_organic_subset(number: u8) -> bool {
    matches!(number, 0 | 5 | 6 | 7 | 8 | 9 | 15 | 16 | 17 | 35 | 53)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_round_trips() {
        for n in 1..=56u8 {
            assert_eq!(atomic_number(symbol(n)), Some(n));
        }
        assert_eq!(atomic_number("Cl"), Some(17));
        assert_eq!(atomic_number("Xx"), None);
        assert_eq!(atomic_number(""), None);
    }
}
