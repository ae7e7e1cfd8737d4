use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{BinaryVector, MAX_QUBITS};
use crate::error::{Error, Result};

/// One symbol of a control string. The derived order is the textual order `'0' < '1' < 'I'`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Control {
    Zero,
    One,
    Free,
}

impl Control {
    pub fn as_char(self) -> char {
        match self {
            Control::Zero => '0',
            Control::One => '1',
            Control::Free => 'I',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            '0' => Some(Control::Zero),
            '1' => Some(Control::One),
            'I' | 'i' => Some(Control::Free),
            _ => None,
        }
    }

    #[inline]
    fn digit(self) -> u64 {
        self as u64
    }
}

/// A string in `{0,1,I}^n`: the controls of one MCX gate, equivalently a subcube of
/// the n-dimensional hypercube.
///
/// Stored as two masks aligned with basis indices: position `q` maps to bit
/// `n-1-q`. A basis index `ν` lies in the subcube iff `ν & care == value`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ControlString {
    n: u8,
    care: u32,
    value: u32,
}

impl ControlString {
    pub fn new(symbols: &[Control]) -> Result<Self> {
        let n = symbols.len() as u32;
        check_n(n)?;
        let mut c = Self::free(n)?;
        for (q, &s) in symbols.iter().enumerate() {
            c = c.with(q, s);
        }
        Ok(c)
    }

    /// `II…I`: no controls.
    pub fn free(n: u32) -> Result<Self> {
        check_n(n)?;
        Ok(Self {
            n: n as u8,
            care: 0,
            value: 0,
        })
    }

    /// Fully controlled string selecting the single basis index `index`.
    pub fn point(n: u32, index: usize) -> Result<Self> {
        check_n(n)?;
        if index >> n != 0 {
            return Err(Error::ControlString(format!("index {index} out of range for n = {n}")));
        }
        Ok(Self {
            n: n as u8,
            care: full_mask(n),
            value: index as u32,
        })
    }

    /// Inverse of [`ControlString::ternary_index`].
    pub fn from_ternary(n: u32, mut index: u64) -> Result<Self> {
        check_n(n)?;
        let mut c = Self::free(n)?;
        for q in (0..n as usize).rev() {
            let s = match index % 3 {
                0 => Control::Zero,
                1 => Control::One,
                _ => Control::Free,
            };
            c = c.with(q, s);
            index /= 3;
        }
        if index != 0 {
            return Err(Error::ControlString("ternary index out of range".into()));
        }
        Ok(c)
    }

    /// All `3^n` strings in lexicographic order.
    pub fn all(n: u32) -> impl Iterator<Item = ControlString> {
        let total = 3u64.pow(n);
        (0..total).map(move |i| Self::from_ternary(n, i).expect("n validated by caller"))
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n as u32
    }

    #[inline]
    pub fn care_mask(&self) -> u32 {
        self.care
    }

    #[inline]
    pub fn value_mask(&self) -> u32 {
        self.value
    }

    #[inline]
    pub fn free_mask(&self) -> u32 {
        !self.care & full_mask(self.n())
    }

    /// Number of controlled positions: the tree layer of this string.
    #[inline]
    pub fn layer(&self) -> u32 {
        self.care.count_ones()
    }

    /// Number of `I` symbols, `#_I`.
    #[inline]
    pub fn free_count(&self) -> u32 {
        self.n() - self.layer()
    }

    #[inline]
    fn bit(&self, q: usize) -> u32 {
        debug_assert!(q < self.n as usize);
        1 << (self.n as usize - 1 - q)
    }

    pub fn symbol(&self, q: usize) -> Control {
        let m = self.bit(q);
        if self.care & m == 0 {
            Control::Free
        } else if self.value & m == 0 {
            Control::Zero
        } else {
            Control::One
        }
    }

    pub fn symbols(&self) -> impl Iterator<Item = Control> + '_ {
        (0..self.n as usize).map(|q| self.symbol(q))
    }

    /// Copy with position `q` replaced by `s`.
    #[must_use]
    pub fn with(mut self, q: usize, s: Control) -> Self {
        let m = self.bit(q);
        match s {
            Control::Zero => {
                self.care |= m;
                self.value &= !m;
            }
            Control::One => {
                self.care |= m;
                self.value |= m;
            }
            Control::Free => {
                self.care &= !m;
                self.value &= !m;
            }
        }
        self
    }

    /// Base-3 number with digits `0,1,I -> 0,1,2`, position 0 most significant.
    /// Ordering by this index is the lexicographic order of the text form.
    pub fn ternary_index(&self) -> u64 {
        self.symbols().fold(0, |acc, s| acc * 3 + s.digit())
    }

    #[inline]
    pub fn contains(&self, index: usize) -> bool {
        index as u32 & self.care == self.value
    }

    /// True iff the two subcubes share no basis index.
    #[inline]
    pub fn is_disjoint(&self, other: &Self) -> bool {
        (self.care & other.care) & (self.value ^ other.value) != 0
    }

    /// Basis indices of the subcube, ascending.
    pub fn cells(&self) -> impl Iterator<Item = usize> {
        let free = self.free_mask();
        let value = self.value;
        let mut next = Some(0u32);
        std::iter::from_fn(move || {
            let s = next?;
            next = if s == free {
                None
            } else {
                Some(s.wrapping_sub(free) & free)
            };
            Some((value | s) as usize)
        })
    }

    /// Indicator vector `b_c = t(c_0) ⊗ … ⊗ t(c_{n-1})`.
    pub fn expand(&self) -> BinaryVector {
        let mut b = BinaryVector::zeros(self.n()).expect("n validated at construction");
        b.toggle_cube(self);
        b
    }
}

fn check_n(n: u32) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        Err(Error::QubitCount(n))
    } else {
        Ok(())
    }
}

#[inline]
fn full_mask(n: u32) -> u32 {
    if n >= 32 {
        !0
    } else {
        (1u32 << n) - 1
    }
}

impl Ord for ControlString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n
            .cmp(&other.n)
            .then_with(|| self.symbols().cmp(other.symbols()))
    }
}

impl PartialOrd for ControlString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ControlString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.symbols() {
            write!(f, "{}", s.as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for ControlString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for ControlString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let symbols = s
            .trim()
            .chars()
            .map(|ch| {
                Control::from_char(ch)
                    .ok_or_else(|| Error::ControlString(format!("unexpected character {ch:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&symbols)
    }
}

impl Serialize for ControlString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ControlString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let c: ControlString = "I0I1".parse().unwrap();
        assert_eq!(c.n(), 4);
        assert_eq!(c.layer(), 2);
        assert_eq!(c.to_string(), "I0I1");
        assert_eq!(c.care_mask(), 0b0101);
        assert_eq!(c.value_mask(), 0b0001);
        assert!("I2".parse::<ControlString>().is_err());
        assert!("".parse::<ControlString>().is_err());
    }

    #[test]
    fn ternary_order_is_lexicographic() {
        let all: Vec<_> = ControlString::all(3).collect();
        assert_eq!(all.first().unwrap().to_string(), "000");
        assert_eq!(all.last().unwrap().to_string(), "III");
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        for (i, c) in all.iter().enumerate() {
            assert_eq!(c.ternary_index(), i as u64);
        }
    }

    #[test]
    fn cells_enumerates_subcube() {
        let c: ControlString = "I0I".parse().unwrap();
        assert_eq!(c.cells().collect::<Vec<_>>(), vec![0, 1, 4, 5]);
        let p = ControlString::point(3, 5).unwrap();
        assert_eq!(p.to_string(), "101");
        assert_eq!(p.cells().collect::<Vec<_>>(), vec![5]);
    }

    #[test]
    fn disjointness() {
        let a: ControlString = "0II".parse().unwrap();
        let b: ControlString = "I0I".parse().unwrap();
        let c: ControlString = "1I0".parse().unwrap();
        assert!(!a.is_disjoint(&b));
        assert!(a.is_disjoint(&c));
        assert!(!b.is_disjoint(&c));
    }
}
