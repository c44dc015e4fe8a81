//! The 21-letter amino-acid alphabet shared by validation and featurization.

/// Residue symbols in canonical order; index in this string is the symbol index.
pub const SYMBOLS: &[u8; 21] = b"ACDEFGHIKLMNPQRSTVWXY";

/// Alphabet size.
pub const SIZE: usize = 21;

/// Stop character permitted once, at the end of a raw sequence.
pub const STOP: u8 = b'*';

const INVALID: u8 = u8::MAX;

const LOOKUP: [u8; 256] = {
    let mut table = [INVALID; 256];
    let mut i = 0;
    while i < SIZE {
        table[SYMBOLS[i] as usize] = i as u8;
        i += 1;
    }
    table
};

/// Index of `symbol` in [`SYMBOLS`], or `None` if it is not a residue.
#[inline]
pub fn index(symbol: u8) -> Option<usize> {
    match LOOKUP[symbol as usize] {
        INVALID => None,
        i => Some(i as usize),
    }
}

#[inline]
pub fn symbol(index: usize) -> u8 {
    SYMBOLS[index]
}

#[inline]
pub fn is_residue(symbol: u8) -> bool {
    LOOKUP[symbol as usize] != INVALID
}

/// Drops a single trailing stop character, if present.
pub fn strip_stop(residues: &str) -> &str {
    residues.strip_suffix('*').unwrap_or(residues)
}

/// Position (1-based) and byte of the first character that is neither a
/// residue nor a permitted trailing stop.
pub fn first_invalid(residues: &[u8]) -> Option<(usize, u8)> {
    let last = residues.len().wrapping_sub(1);
    residues
        .iter()
        .enumerate()
        .find(|&(i, &b)| !(is_residue(b) || (b == STOP && i == last)))
        .map(|(i, &b)| (i + 1, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_is_a_bijection() {
        for (i, &s) in SYMBOLS.iter().enumerate() {
            assert_eq!(index(s), Some(i));
            assert_eq!(symbol(i), s);
        }
        let valid = (0..=255u8).filter(|&b| is_residue(b)).count();
        assert_eq!(valid, SIZE);
    }

    #[test]
    fn stop_only_allowed_last() {
        assert_eq!(first_invalid(b"AAA*"), None);
        assert_eq!(first_invalid(b"A*A"), Some((2, b'*')));
        assert_eq!(first_invalid(b"MDZ"), Some((3, b'Z')));
        assert_eq!(first_invalid(b"AA**"), Some((3, b'*')));
    }
}
