//! Fixed-length bitstrings.
//!
//! Position 0 is the most significant bit of the packed integer, so the
//! packed value doubles as the index into a dense `2^n` table (wire 0 =
//! most significant bit). Every module in the crate shares this layout.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Largest supported bitstring length.
pub const MAX_BITS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BitsError {
    #[error("bitstring length {0} exceeds {MAX_BITS}")]
    TooLong(usize),
    #[error("invalid character {0:?} in bitstring (expected '0' or '1')")]
    InvalidChar(char),
    #[error("value {value:#x} does not fit in {len} bits")]
    Overflow { value: u64, len: usize },
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    len: usize,
    value: u64,
}

#[inline]
fn mask(len: usize) -> u64 {
    if len == 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl BitString {
    pub fn new(len: usize, value: u64) -> Result<Self, BitsError> {
        if len > MAX_BITS {
            return Err(BitsError::TooLong(len));
        }
        if value & !mask(len) != 0 {
            return Err(BitsError::Overflow { value, len });
        }
        Ok(Self { len, value })
    }

    /// Caller guarantees `len <= 64` and that `value` fits.
    #[inline]
    pub(crate) fn from_index(len: usize, value: u64) -> Self {
        debug_assert!(len <= MAX_BITS && value & !mask(len) == 0);
        Self { len, value }
    }

    pub fn zeros(len: usize) -> Self {
        Self::from_index(len.min(MAX_BITS), 0)
    }

    pub fn ones(len: usize) -> Self {
        let len = len.min(MAX_BITS);
        Self::from_index(len, mask(len))
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self, BitsError> {
        if bits.len() > MAX_BITS {
            return Err(BitsError::TooLong(bits.len()));
        }
        let value = bits.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b & 1));
        Ok(Self::from_index(bits.len(), value))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Packed value; equals the dense-table index of this string.
    #[inline]
    pub fn index(&self) -> u64 {
        self.value
    }

    #[inline]
    pub fn get(&self, pos: usize) -> u8 {
        debug_assert!(pos < self.len);
        ((self.value >> (self.len - 1 - pos)) & 1) as u8
    }

    pub fn with_bit(mut self, pos: usize, bit: u8) -> Self {
        let shift = self.len - 1 - pos;
        self.value = (self.value & !(1 << shift)) | (u64::from(bit & 1) << shift);
        self
    }

    pub fn weight(&self) -> u32 {
        self.value.count_ones()
    }

    /// Parity `|x|` of the string, as a bit.
    #[inline]
    pub fn parity(&self) -> u8 {
        (self.value.count_ones() & 1) as u8
    }

    /// GF(2) inner product with another string of the same length.
    #[inline]
    pub fn dot(&self, other: &BitString) -> u8 {
        debug_assert_eq!(self.len, other.len);
        ((self.value & other.value).count_ones() & 1) as u8
    }

    /// Appends `bit` as a new least-significant position.
    pub fn push(&self, bit: u8) -> Result<Self, BitsError> {
        if self.len + 1 > MAX_BITS {
            return Err(BitsError::TooLong(self.len + 1));
        }
        Ok(Self::from_index(self.len + 1, (self.value << 1) | u64::from(bit & 1)))
    }

    /// Removes the last position.
    pub fn pop(&self) -> (Self, u8) {
        assert!(self.len > 0, "pop on empty bitstring");
        (Self::from_index(self.len - 1, self.value >> 1), (self.value & 1) as u8)
    }

    /// Leading `k` positions.
    pub fn prefix(&self, k: usize) -> Self {
        assert!(k <= self.len);
        if k == 0 {
            return Self::zeros(0);
        }
        Self::from_index(k, self.value >> (self.len - k))
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// All strings of length `len` in lexicographic (= numeric) order.
    pub fn all(len: usize) -> impl Iterator<Item = BitString> {
        assert!(len < MAX_BITS, "cannot enumerate 2^{len} strings");
        (0..(1u64 << len)).map(move |v| BitString::from_index(len, v))
    }

    pub fn not(&self) -> Self {
        Self::from_index(self.len, !self.value & mask(self.len))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = BitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(BitsError::InvalidChar(other)),
            })
            .collect::<Result<Vec<u8>, _>>()?;
        Self::from_bits(&bits)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msb_is_position_zero() {
        let b: BitString = "100".parse().unwrap();
        assert_eq!(b.index(), 4);
        assert_eq!(b.get(0), 1);
        assert_eq!(b.get(2), 0);
        assert_eq!(b.to_string(), "100");
    }

    #[test]
    fn push_pop_prefix() {
        let b: BitString = "101".parse().unwrap();
        let c = b.push(1).unwrap();
        assert_eq!(c.to_string(), "1011");
        assert_eq!(c.pop(), (b, 1));
        assert_eq!(c.prefix(2).to_string(), "10");
        assert_eq!(c.prefix(0).len(), 0);
    }

    #[test]
    fn rejects_garbage() {
        assert_eq!("10a".parse::<BitString>(), Err(BitsError::InvalidChar('a')));
        assert!(BitString::new(2, 4).is_err());
        assert!(BitString::new(65, 0).is_err());
    }

    #[test]
    fn dot_and_parity() {
        let s: BitString = "1011".parse().unwrap();
        let x: BitString = "1110".parse().unwrap();
        assert_eq!(s.dot(&x), 0);
        assert_eq!(x.parity(), 1);
        assert_eq!(BitString::zeros(0).parity(), 0);
    }

    #[test]
    fn with_bit_and_not() {
        let b = BitString::zeros(3).with_bit(1, 1);
        assert_eq!(b.to_string(), "010");
        assert_eq!(b.not().to_string(), "101");
        assert_eq!(BitString::ones(64).not(), BitString::zeros(64));
    }
}
