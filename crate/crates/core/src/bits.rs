//! Fixed-width binary words over the Boolean space of dimension `N`.
//!
//! Bits are packed little-endian into `u64` words: bit `i` lives in word
//! `i / 64` at position `i % 64`. Padding bits above `len` are always zero,
//! so equality, hashing and XOR/popcount distance work on whole words.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitsError {
    #[error("bit vectors differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid bit character {found:?} at position {position}")]
    InvalidChar { position: usize, found: char },
    #[error("bit index {index} out of range for length {len}")]
    OutOfRange { index: usize, len: usize },
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

#[inline]
fn word_count(len: usize) -> usize {
    len.div_ceil(64)
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; word_count(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self {
            len,
            words: vec![u64::MAX; word_count(len)],
        };
        v.clear_padding();
        v
    }

    /// Builds a vector from booleans, index 0 first.
    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.words[i / 64] |= 1 << (i % 64);
            }
        }
        v
    }

    /// Interprets the low `len` bits of `value` as a vector, with bit `i` of
    /// the integer mapped to position `i`.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64, "from_u64 supports at most 64 bits");
        let mut v = Self::zeros(len);
        if len > 0 {
            v.words[0] = value;
            v.clear_padding();
        }
        v
    }

    /// Uniformly random vector of the given length.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut v = Self {
            len,
            words: (0..word_count(len)).map(|_| rng.gen()).collect(),
        };
        v.clear_padding();
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, index: usize) -> bool {
        assert!(
            index < self.len,
            "bit index {index} out of range for length {}",
            self.len
        );
        (self.words[index / 64] >> (index % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, index: usize, value: bool) {
        assert!(
            index < self.len,
            "bit index {index} out of range for length {}",
            self.len
        );
        let mask = 1u64 << (index % 64);
        if value {
            self.words[index / 64] |= mask;
        } else {
            self.words[index / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, index: usize) {
        assert!(
            index < self.len,
            "bit index {index} out of range for length {}",
            self.len
        );
        self.words[index / 64] ^= 1 << (index % 64);
    }

    /// Copy of `self` with bit `index` inverted.
    pub fn flipped(&self, index: usize) -> Result<Self, BitsError> {
        if index >= self.len {
            return Err(BitsError::OutOfRange { index, len: self.len });
        }
        let mut out = self.clone();
        out.flip(index);
        Ok(out)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Packed words; padding bits are zero.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Builds from packed words; padding bits are cleared.
    pub(crate) fn from_words(len: usize, words: &[u64]) -> Self {
        debug_assert_eq!(words.len(), word_count(len));
        let mut v = Self {
            len,
            words: words.to_vec(),
        };
        v.clear_padding();
        v
    }

    /// Hamming distance without the length check. Callers guarantee equal
    /// lengths; used on the hot read path.
    #[inline]
    pub(crate) fn distance_unchecked(&self, other: &Self) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }

    fn clear_padding(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

/// Number of positions where `a` and `b` differ.
pub fn hamming(a: &BitVector, b: &BitVector) -> Result<u32, BitsError> {
    if a.len != b.len {
        return Err(BitsError::LengthMismatch {
            left: a.len,
            right: b.len,
        });
    }
    Ok(a.distance_unchecked(b))
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl FromStr for BitVector {
    type Err = BitsError;

    /// Parses a string of `0`/`1` characters, position 0 first.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut v = Self::zeros(s.chars().count());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                found => return Err(BitsError::InvalidChar { position: i, found }),
            }
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bv(s: &str) -> BitVector {
        s.parse().unwrap()
    }

    #[test]
    fn hamming_hand_cases() {
        assert_eq!(hamming(&bv("00000"), &bv("00000")).unwrap(), 0);
        assert_eq!(hamming(&bv("10101"), &bv("01010")).unwrap(), 5);
        assert_eq!(hamming(&bv("0011"), &bv("0110")).unwrap(), 2);
    }

    #[test]
    fn hamming_rejects_length_mismatch() {
        assert_eq!(
            hamming(&bv("001"), &bv("0011")),
            Err(BitsError::LengthMismatch { left: 3, right: 4 })
        );
    }

    #[test]
    fn parse_display_and_errors() {
        assert_eq!(bv("1010").to_string(), "1010");
        assert!(bv("1010").get(0));
        assert!(!bv("1010").get(1));
        assert_eq!(
            "10x1".parse::<BitVector>(),
            Err(BitsError::InvalidChar {
                position: 2,
                found: 'x'
            })
        );
    }

    #[test]
    fn ones_keeps_padding_clear() {
        let v = BitVector::ones(70);
        assert_eq!(v.count_ones(), 70);
        assert_eq!(v.words()[1], (1 << 6) - 1);
        assert_eq!(BitVector::from_u64(u64::MAX, 3), bv("111"));
    }

    #[test]
    fn flipped_out_of_range() {
        assert!(matches!(
            bv("01").flipped(2),
            Err(BitsError::OutOfRange { index: 2, len: 2 })
        ));
    }

    fn triple() -> impl Strategy<Value = (BitVector, BitVector, BitVector)> {
        (1usize..150).prop_flat_map(|n| {
            let v = || proptest::collection::vec(any::<bool>(), n).prop_map(|b| BitVector::from_bools(&b));
            (v(), v(), v())
        })
    }

    proptest! {
        #[test]
        fn hamming_is_a_metric((a, b, c) in triple()) {
            let ab = hamming(&a, &b).unwrap();
            prop_assert_eq!(ab, hamming(&b, &a).unwrap());
            prop_assert_eq!(ab == 0, a == b);
            prop_assert!(ab as usize <= a.len());
            prop_assert!(hamming(&a, &c).unwrap() <= ab + hamming(&b, &c).unwrap());
        }

        #[test]
        fn string_form_roundtrips(bits in proptest::collection::vec(any::<bool>(), 0..200)) {
            let v = BitVector::from_bools(&bits);
            prop_assert_eq!(v.to_string().parse::<BitVector>().unwrap(), v.clone());
            prop_assert_eq!(v.iter().collect::<Vec<_>>(), bits);
        }
    }
}
