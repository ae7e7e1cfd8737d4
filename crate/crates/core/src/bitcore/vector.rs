use std::fmt;
use std::ops::{BitAnd, BitXor, BitXorAssign};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ControlString;
use crate::error::{Error, Result};

/// Largest supported qubit count for packed vectors (2^30 bits = 128 MiB).
pub const MAX_QUBITS: u32 = 30;

/// A length-2^n vector over F2, packed into 64-bit words.
///
/// Bit `ν` lives in word `ν / 64` at bit position `ν % 64`. Qubit 0 is the most
/// significant bit of `ν`, so the textual form (index 0 leftmost) reads like the
/// Kronecker product `t(c_0) ⊗ … ⊗ t(c_{n-1})`. Padding bits past `2^n` are zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryVector {
    n: u32,
    words: Vec<u64>,
}

#[inline]
fn word_count(n: u32) -> usize {
    ((1usize << n) + 63) / 64
}

/// Mask of the valid bits in the last word.
#[inline]
fn tail_mask(n: u32) -> u64 {
    let len = 1u64 << n;
    if len >= 64 {
        !0
    } else {
        (1u64 << len) - 1
    }
}

impl BinaryVector {
    pub fn zeros(n: u32) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::QubitCount(n));
        }
        Ok(Self {
            n,
            words: vec![0; word_count(n)],
        })
    }

    pub fn ones(n: u32) -> Result<Self> {
        let mut v = Self::zeros(n)?;
        v.words.iter_mut().for_each(|w| *w = !0);
        v.clear_padding();
        Ok(v)
    }

    /// Vector with ones exactly at `indices`; repeated indices toggle.
    pub fn from_indices(n: u32, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut v = Self::zeros(n)?;
        for i in indices {
            if i >= v.len() {
                return Err(Error::BitString(format!("index {i} out of range for n = {n}")));
            }
            v.flip(i);
        }
        Ok(v)
    }

    pub fn from_bools(bits: &[bool]) -> Result<Self> {
        let n = qubits_for_len(bits.len())?;
        let mut v = Self::zeros(n)?;
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        Ok(v)
    }

    /// Builds a vector from raw words; bits past `2^n` must be zero.
    pub fn from_words(n: u32, words: Vec<u64>) -> Result<Self> {
        let expected = Self::zeros(n)?.words.len();
        if words.len() != expected {
            return Err(Error::Dimension {
                expected,
                got: words.len(),
            });
        }
        let v = Self { n, words };
        if v.words[expected - 1] & !tail_mask(n) != 0 {
            return Err(Error::BitString("padding bits must be zero".into()));
        }
        Ok(v)
    }

    /// Parses the hexadecimal form: nibble `k` holds bits `4k..4k+3`, bit `4k` as the
    /// nibble's most significant bit (i.e. the hex transcription of the bit string).
    pub fn from_hex(n: u32, hex: &str) -> Result<Self> {
        let mut v = Self::zeros(n)?;
        let digits: Vec<char> = hex
            .trim()
            .trim_start_matches("0x")
            .chars()
            .filter(|c| *c != '_' && !c.is_whitespace())
            .collect();
        let nibbles = (v.len() + 3) / 4;
        if digits.len() != nibbles {
            return Err(Error::BitString(format!(
                "expected {nibbles} hex digits for n = {n}, got {}",
                digits.len()
            )));
        }
        for (k, ch) in digits.iter().enumerate() {
            let d = ch
                .to_digit(16)
                .ok_or_else(|| Error::BitString(format!("bad hex digit {ch:?}")))?;
            for j in 0..4 {
                if d >> (3 - j) & 1 == 1 {
                    let i = 4 * k + j;
                    if i >= v.len() {
                        return Err(Error::BitString("hex padding bits must be zero".into()));
                    }
                    v.set(i, true);
                }
            }
        }
        Ok(v)
    }

    pub fn to_hex(&self) -> String {
        let mut out = String::with_capacity((self.len() + 3) / 4);
        for k in 0..(self.len() + 3) / 4 {
            let mut d = 0u32;
            for j in 0..4 {
                let i = 4 * k + j;
                d = d << 1 | (i < self.len() && self.get(i)) as u32;
            }
            out.push(char::from_digit(d, 16).unwrap());
        }
        out
    }

    /// Number of qubits `n`.
    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    /// Number of bits, `2^n`.
    #[inline]
    pub fn len(&self) -> usize {
        1usize << self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len());
        self.words[i >> 6] >> (i & 63) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        debug_assert!(i < self.len());
        let m = 1u64 << (i & 63);
        if bit {
            self.words[i >> 6] |= m;
        } else {
            self.words[i >> 6] &= !m;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len());
        self.words[i >> 6] ^= 1u64 << (i & 63);
    }

    pub fn popcount(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Indices of the set bits, ascending.
    pub fn ones_iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(k * 64 + t)
                }
            })
        })
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    /// Bitwise complement within the `2^n` valid bits.
    pub fn complement(&self) -> Self {
        let mut v = Self {
            n: self.n,
            words: self.words.iter().map(|w| !w).collect(),
        };
        v.clear_padding();
        v
    }

    pub fn and_popcount(&self, other: &Self) -> u64 {
        assert_eq!(self.n, other.n, "qubit count mismatch");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum()
    }

    /// XORs the indicator vector of the subcube selected by `c` into `self`.
    pub fn toggle_cube(&mut self, c: &ControlString) {
        assert_eq!(self.n, c.n(), "qubit count mismatch");
        for_each_chunk(c, |word, mask| self.words[word] ^= mask);
    }

    /// Number of ones of `self` inside the subcube selected by `c`.
    pub fn count_in_cube(&self, c: &ControlString) -> u64 {
        assert_eq!(self.n, c.n(), "qubit count mismatch");
        let mut total = 0;
        for_each_chunk(c, |word, mask| total += (self.words[word] & mask).count_ones() as u64);
        total
    }

    fn clear_padding(&mut self) {
        let m = tail_mask(self.n);
        if let Some(last) = self.words.last_mut() {
            *last &= m;
        }
    }
}

/// Visits the subcube of `c` as (word index, bit mask) chunks. Free low-order
/// qubits make each chunk a run of up to 64 contiguous bits.
fn for_each_chunk(c: &ControlString, mut f: impl FnMut(usize, u64)) {
    let free = c.free_mask();
    let run = free.trailing_ones().min(6);
    let chunk_len = 1u32 << run;
    let chunk = if chunk_len == 64 {
        !0u64
    } else {
        (1u64 << chunk_len) - 1
    };
    let hi = free & !((1u32 << run) - 1);
    let value = c.value_mask();
    let mut s = 0u32;
    loop {
        let base = (value | s) as usize;
        f(base >> 6, chunk << (base & 63));
        if s == hi {
            break;
        }
        s = s.wrapping_sub(hi) & hi;
    }
}

pub(crate) fn qubits_for_len(len: usize) -> Result<u32> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(len));
    }
    let n = len.trailing_zeros();
    if n > MAX_QUBITS {
        return Err(Error::QubitCount(n));
    }
    Ok(n)
}

impl BitXorAssign<&BinaryVector> for BinaryVector {
    fn bitxor_assign(&mut self, rhs: &BinaryVector) {
        assert_eq!(self.n, rhs.n, "qubit count mismatch");
        for (a, b) in self.words.iter_mut().zip(&rhs.words) {
            *a ^= b;
        }
    }
}

impl BitXor for &BinaryVector {
    type Output = BinaryVector;

    fn bitxor(self, rhs: &BinaryVector) -> BinaryVector {
        let mut out = self.clone();
        out ^= rhs;
        out
    }
}

impl BitAnd for &BinaryVector {
    type Output = BinaryVector;

    fn bitand(self, rhs: &BinaryVector) -> BinaryVector {
        assert_eq!(self.n, rhs.n, "qubit count mismatch");
        BinaryVector {
            n: self.n,
            words: self.words.iter().zip(&rhs.words).map(|(a, b)| a & b).collect(),
        }
    }
}

impl fmt::Display for BinaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BinaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len() <= 256 {
            write!(f, "BinaryVector({self})")
        } else {
            write!(f, "BinaryVector(n={}, hex={})", self.n, self.to_hex())
        }
    }
}

impl FromStr for BinaryVector {
    type Err = Error;

    /// Parses a '0'/'1' string, index 0 leftmost. Whitespace and '_' are ignored.
    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .filter(|c| *c != '_' && !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::BitString(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bools(&bits).map_err(|e| match e {
            Error::NotPowerOfTwo(len) => {
                Error::BitString(format!("length {len} is not a power of two >= 2"))
            }
            e => e,
        })
    }
}

impl Serialize for BinaryVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BinaryVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
