//! Owned bit strings used for key material, sketches and hash seeds.

use std::fmt;
use std::ops::BitXor;

use crate::error::{Error, Result};

/// An ordered sequence of bits, most significant first when packed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BitVector(Vec<bool>);

impl BitVector {
    pub fn new() -> Self {
        BitVector(Vec::new())
    }

    pub fn zeros(len: usize) -> Self {
        BitVector(vec![false; len])
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitVector(bits)
    }

    /// The low `width` bits of `value`, most significant first.
    pub fn from_uint(value: u64, width: usize) -> Self {
        assert!(width <= 64);
        BitVector((0..width).rev().map(|i| (value >> i) & 1 == 1).collect())
    }

    /// Parses a string of `0`/`1` characters. Whitespace is ignored.
    pub fn from_ascii(s: &str) -> Result<Self> {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::invalid(
                    "bits",
                    format!("unexpected character {other:?}"),
                )),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitVector)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<bool> {
        self.0
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.0.get(i).copied()
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.0[i] = value;
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = !self.0[i];
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    pub fn extend_from(&mut self, other: &BitVector) {
        self.0.extend_from_slice(&other.0);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Interprets the bits as an unsigned integer, most significant first.
    pub fn to_uint(&self) -> u64 {
        assert!(self.len() <= 64);
        self.0.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn slice(&self, start: usize, end: usize) -> BitVector {
        BitVector(self.0[start..end].to_vec())
    }

    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a BitVector>) -> BitVector {
        let mut out = BitVector::new();
        for p in parts {
            out.extend_from(p);
        }
        out
    }

    pub fn xor(&self, other: &BitVector) -> Result<BitVector> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(BitVector(
            self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect(),
        ))
    }

    pub fn hamming_distance(&self, other: &BitVector) -> Result<usize> {
        Ok(self.xor(other)?.count_ones())
    }

    /// Packs into bytes (MSB first, zero padded) and hex encodes.
    pub fn to_hex(&self) -> String {
        let bytes: Vec<u8> = self
            .0
            .chunks(8)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &b)| acc | ((b as u8) << (7 - i)))
            })
            .collect();
        hex::encode(bytes)
    }

    /// Inverse of [`BitVector::to_hex`]; `len` trims the padding.
    pub fn from_hex(s: &str, len: usize) -> Result<BitVector> {
        let bytes = hex::decode(s).map_err(|e| Error::invalid("hex", e.to_string()))?;
        if bytes.len() * 8 < len || bytes.len() > len.div_ceil(8) {
            return Err(Error::LengthMismatch {
                expected: len.div_ceil(8),
                got: bytes.len(),
            });
        }
        Ok(BitVector(
            (0..len)
                .map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1 == 1)
                .collect(),
        ))
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl From<Vec<bool>> for BitVector {
    fn from(v: Vec<bool>) -> Self {
        BitVector(v)
    }
}

impl FromIterator<bool> for BitVector {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        BitVector(iter.into_iter().collect())
    }
}

impl BitXor for &BitVector {
    type Output = BitVector;

    /// Panics on length mismatch; use [`BitVector::xor`] for the checked form.
    fn bitxor(self, rhs: &BitVector) -> BitVector {
        self.xor(rhs)
            .expect("xor of bit vectors with different lengths")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uint_round_trip() {
        let b = BitVector::from_uint(0b1011, 4);
        assert_eq!(b.to_string(), "1011");
        assert_eq!(b.to_uint(), 11);
        assert_eq!(BitVector::from_uint(1, 3).to_string(), "001");
    }

    #[test]
    fn xor_rejects_length_mismatch() {
        let a = BitVector::zeros(3);
        let b = BitVector::zeros(4);
        assert_eq!(
            a.xor(&b),
            Err(Error::LengthMismatch {
                expected: 3,
                got: 4
            })
        );
    }

    #[test]
    fn ascii_parse() {
        let b = BitVector::from_ascii("10 01").unwrap();
        assert_eq!(b.to_string(), "1001");
        assert!(BitVector::from_ascii("102").is_err());
    }

    proptest! {
        #[test]
        fn hex_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..200)) {
            let b = BitVector::from_bits(bits);
            let back = BitVector::from_hex(&b.to_hex(), b.len()).unwrap();
            prop_assert_eq!(back, b);
        }

        #[test]
        fn xor_is_an_involution(pair in proptest::collection::vec(any::<(bool, bool)>(), 0..100)) {
            let (a, b): (Vec<bool>, Vec<bool>) = pair.into_iter().unzip();
            let (a, b) = (BitVector::from_bits(a), BitVector::from_bits(b));
            prop_assert_eq!(&(&a ^ &b) ^ &b, a);
        }
    }
}
