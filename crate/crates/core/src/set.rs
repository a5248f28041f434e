//! Dense bitmask sets over a ground set of at most 64 elements.
//!
//! Elements are `usize` ids in `0..n`; a set is a `u64` with bit `e` set
//! iff element `e` is a member. Everything in the crate that manipulates
//! subsets (matroid oracles, submodular tables, scheme runs) works on
//! these masks.

/// A subset of the ground set, one bit per element.
pub type Mask = u64;

/// The singleton `{e}`.
#[inline]
pub fn bit(e: usize) -> Mask {
    debug_assert!(e < 64);
    1u64 << e
}

/// Does `s` contain `e`?
#[inline]
pub fn contains(s: Mask, e: usize) -> bool {
    e < 64 && s & bit(e) != 0
}

/// Number of elements in `s`.
#[inline]
pub fn card(s: Mask) -> usize {
    s.count_ones() as usize
}

/// The full ground set `{0, .., n-1}`.
#[inline]
pub fn full(n: usize) -> Mask {
    debug_assert!(n <= 64);
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Iterate the members of `s` in increasing order.
pub fn iter(s: Mask) -> impl Iterator<Item = usize> {
    let mut rest = s;
    std::iter::from_fn(move || {
        if rest == 0 {
            None
        } else {
            let e = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(e)
        }
    })
}

/// Collect the members of `s` in increasing order.
pub fn to_vec(s: Mask) -> Vec<usize> {
    iter(s).collect()
}

/// Build a mask from element ids. Panics on ids >= 64.
pub fn from_elems<I: IntoIterator<Item = usize>>(elems: I) -> Mask {
    let mut s = 0;
    for e in elems {
        s |= bit(e);
    }
    s
}

/// Iterate every subset of `s` (including the empty set and `s` itself).
///
/// Order: the standard descending sub-mask walk, ending with the empty set.
pub fn subsets(s: Mask) -> impl Iterator<Item = Mask> {
    let mut sub = s;
    let mut done = false;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let cur = sub;
        if sub == 0 {
            done = true;
        } else {
            sub = (sub - 1) & s;
        }
        Some(cur)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_basics() {
        let s = from_elems([0, 2, 5]);
        assert_eq!(card(s), 3);
        assert!(contains(s, 2));
        assert!(!contains(s, 1));
        assert_eq!(to_vec(s), vec![0, 2, 5]);
        assert_eq!(full(3), 0b111);
        assert_eq!(full(64), u64::MAX);
    }

    #[test]
    fn subset_walk_is_complete() {
        let s = from_elems([1, 3, 4]);
        let all: Vec<Mask> = subsets(s).collect();
        assert_eq!(all.len(), 8);
        // Every listed mask is a subset, no duplicates, empty set present.
        let mut seen = std::collections::HashSet::new();
        for m in &all {
            assert_eq!(m & !s, 0);
            assert!(seen.insert(*m));
        }
        assert!(seen.contains(&0));
        assert!(seen.contains(&s));
    }

    #[test]
    fn subsets_of_empty() {
        let all: Vec<Mask> = subsets(0).collect();
        assert_eq!(all, vec![0]);
    }
}
