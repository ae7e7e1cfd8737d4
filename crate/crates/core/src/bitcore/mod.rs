//! Packed binary vectors over F2 and `{0,1,I}^n` control-string algebra.
//!
//! A control string selects a subcube of the n-hypercube; its expansion is the
//! indicator vector of that subcube. An MCX gate with controls `c` applied to the
//! uniform superposition toggles exactly the bits of `expand(c)`, so every MCX
//! product corresponds to an XOR of expansions.

mod control;
mod vector;

pub use control::{Control, ControlString};
pub use vector::{BinaryVector, MAX_QUBITS};

pub(crate) use vector::qubits_for_len;

use num_rational::Ratio;

use crate::error::{Error, Result};

/// Indicator vector of the subcube selected by `c`.
pub fn expand(c: &ControlString) -> BinaryVector {
    c.expand()
}

/// Fraction of the subcube of `c` covered by ones of `b`, as an exact rational.
pub fn fullness(b: &BinaryVector, c: &ControlString) -> Ratio<u64> {
    Ratio::new(b.count_in_cube(c), 1u64 << c.free_count())
}

/// Position `p` at which `c0` holds `0` and `c1` holds `1`, all other positions equal.
pub fn bipartition_position(c0: &ControlString, c1: &ControlString) -> Option<usize> {
    if c0.n() != c1.n() || c0.care_mask() != c1.care_mask() {
        return None;
    }
    let diff = c0.value_mask() ^ c1.value_mask();
    if diff.count_ones() != 1 || c1.value_mask() & diff == 0 {
        return None;
    }
    Some((c0.n() - 1 - diff.trailing_zeros()) as usize)
}

/// True iff the one-patterns of `b` on the two halves `c0`, `c1` are bitwise
/// complements once aligned by flipping the cut position.
pub fn is_complementary_cut(b: &BinaryVector, c0: &ControlString, c1: &ControlString) -> Result<bool> {
    if c0.n() != b.n() {
        return Err(Error::Dimension {
            expected: b.n() as usize,
            got: c0.n() as usize,
        });
    }
    let Some(_) = bipartition_position(c0, c1) else {
        return Err(Error::NotABipartition(c0.to_string(), c1.to_string()));
    };
    let offset = (c0.value_mask() ^ c1.value_mask()) as usize;
    Ok(complementary_halves(b, c0, offset))
}

/// Unchecked core of [`is_complementary_cut`]; `offset` is the partner distance.
pub(crate) fn complementary_halves(b: &BinaryVector, c0: &ControlString, offset: usize) -> bool {
    c0.cells().all(|nu| b.get(nu) != b.get(nu | offset))
}

/// Joins two control strings that differ in exactly one position using
/// `{0,1} -> I`, `{0,I} -> 1`, `{1,I} -> 0`. The result expands to the XOR of the inputs.
pub fn try_join(a: &ControlString, b: &ControlString) -> Option<ControlString> {
    if a.n() != b.n() {
        return None;
    }
    let mut diff = None;
    for (q, (x, y)) in a.symbols().zip(b.symbols()).enumerate() {
        if x != y {
            if diff.is_some() {
                return None;
            }
            diff = Some((q, x, y));
        }
    }
    let (q, x, y) = diff?;
    let joined = match (x.min(y), x.max(y)) {
        (Control::Zero, Control::One) => Control::Free,
        (Control::Zero, Control::Free) => Control::One,
        (Control::One, Control::Free) => Control::Zero,
        _ => unreachable!("symbols differ"),
    };
    Some(a.with(q, joined))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn cs(s: &str) -> ControlString {
        s.parse().unwrap()
    }

    fn bv(s: &str) -> BinaryVector {
        s.parse().unwrap()
    }

    #[test]
    fn expand_examples() {
        assert_eq!(expand(&cs("I0I")).to_string(), "11001100");
        assert_eq!(expand(&cs("IIIII")), BinaryVector::ones(5).unwrap());
        assert_eq!(expand(&cs("I1I1")).to_string(), "0000010100000101");
    }

    /// Kronecker product of t(c_q) written out directly.
    fn kron_oracle(c: &ControlString) -> Vec<bool> {
        let mut out = vec![true];
        for s in c.symbols() {
            let t = match s {
                Control::Zero => [true, false],
                Control::One => [false, true],
                Control::Free => [true, true],
            };
            out = out.iter().flat_map(|&a| t.iter().map(move |&b| a && b)).collect();
        }
        out
    }

    #[test]
    fn expand_matches_kronecker_product() {
        for n in 1..=5 {
            for c in ControlString::all(n) {
                assert_eq!(expand(&c).to_bools(), kron_oracle(&c), "{c}");
                assert_eq!(expand(&c).popcount(), 1 << c.free_count());
            }
        }
    }

    #[test]
    fn fullness_examples() {
        assert_eq!(fullness(&bv("11001000"), &cs("I0I")), Ratio::new(3, 4));
        assert_eq!(fullness(&bv("00110000"), &cs("I0I")), Ratio::from_integer(0));
        assert_eq!(fullness(&bv("11001100"), &cs("I0I")), Ratio::from_integer(1));
    }

    #[test]
    fn complementary_cut_examples() {
        let b = bv("10010110");
        assert!(is_complementary_cut(&b, &cs("0II"), &cs("1II")).unwrap());
        let b = bv("11111010 00000101");
        assert!(is_complementary_cut(&b, &cs("0III"), &cs("1III")).unwrap());
        let b = bv("11001100");
        assert!(!is_complementary_cut(&b, &cs("0II"), &cs("1II")).unwrap());
    }

    #[test]
    fn complementary_cut_rejects_non_bipartitions() {
        let b = bv("10010110");
        for (c0, c1) in [("1II", "0II"), ("0II", "0II"), ("00I", "11I"), ("0II", "1I0"), ("0I", "1I")] {
            let c1 = cs(c1);
            let c0 = cs(c0);
            assert!(is_complementary_cut(&b, &c0, &c1).is_err(), "{c0} {c1}");
        }
    }

    #[test]
    fn complementary_cut_inner_position() {
        // halves of I0I / I1I: cells {0,1,4,5} vs {2,3,6,7}
        let b = bv("10011001");
        assert!(is_complementary_cut(&b, &cs("I0I"), &cs("I1I")).unwrap());
        assert!(!is_complementary_cut(&b, &cs("0II"), &cs("1II")).unwrap());
    }

    #[test]
    fn join_examples() {
        assert_eq!(try_join(&cs("101"), &cs("111")), Some(cs("1I1")));
        assert_eq!(try_join(&cs("000"), &cs("001")), Some(cs("00I")));
        assert_eq!(try_join(&cs("0I0"), &cs("0II")), Some(cs("0I1")));
        assert_eq!(try_join(&cs("1I0"), &cs("II0")), Some(cs("0I0")));
        assert_eq!(try_join(&cs("000"), &cs("011")), None);
        assert_eq!(try_join(&cs("000"), &cs("000")), None);
    }

    #[test]
    fn join_is_xor_exhaustive() {
        for n in 1..=4 {
            let all: Vec<_> = ControlString::all(n).collect();
            for a in &all {
                for b in &all {
                    if let Some(j) = try_join(a, b) {
                        assert_eq!(expand(&j), &expand(a) ^ &expand(b), "{a} + {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn control_string_count_is_three_to_the_n() {
        for n in 1..=6 {
            let distinct: HashSet<_> = ControlString::all(n).collect();
            assert_eq!(distinct.len(), 3usize.pow(n));
            let expansions: HashSet<_> = ControlString::all(n).map(|c| expand(&c)).collect();
            assert_eq!(expansions.len(), 3usize.pow(n));
        }
    }

    fn arb_vector(n: u32) -> impl Strategy<Value = BinaryVector> {
        proptest::collection::vec(any::<bool>(), 1 << n).prop_map(|bits| BinaryVector::from_bools(&bits).unwrap())
    }

    proptest! {
        #[test]
        fn xor_group_laws(a in arb_vector(7), b in arb_vector(7), c in arb_vector(7)) {
            prop_assert!((&a ^ &a).is_zero());
            prop_assert_eq!(&a ^ &b, &b ^ &a);
            prop_assert_eq!(&(&a ^ &b) ^ &c, &a ^ &(&b ^ &c));
        }

        #[test]
        fn complementary_cut_matches_definition(b in arb_vector(5), t in 0u64..243, p in 0usize..5) {
            let c = ControlString::from_ternary(5, t).unwrap().with(p, Control::Free);
            let c0 = c.with(p, Control::Zero);
            let c1 = c.with(p, Control::One);
            let x: Vec<_> = c0.cells().map(|i| b.get(i)).collect();
            let y: Vec<_> = c1.cells().map(|i| !b.get(i)).collect();
            prop_assert_eq!(is_complementary_cut(&b, &c0, &c1).unwrap(), x == y);
        }
    }
}
