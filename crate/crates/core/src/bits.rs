//! Finite binary strings.

use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

use crate::error::Error;

/// A binary string of length at most [`BitString::MAX_LEN`].
///
/// Bits are packed most-significant-first, so the packed value is the string
/// read as a binary numeral. The derived ordering compares length first and
/// then that value, which is the length-lexicographic order on `2^{<ω}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitString {
    len: u8,
    bits: u64,
}

impl BitString {
    pub const MAX_LEN: usize = 64;

    pub const fn empty() -> Self {
        BitString { len: 0, bits: 0 }
    }

    /// The string of length `len` whose binary value is `value`.
    pub fn from_value(len: usize, value: u64) -> Self {
        assert!(len <= Self::MAX_LEN, "bit string longer than {}", Self::MAX_LEN);
        assert!(len == 64 || value >> len == 0, "value {} does not fit {} bits", value, len);
        BitString { len: len as u8, bits: value }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        bits.iter().fold(Self::empty(), |s, &b| s.child(b))
    }

    pub fn zeros(len: usize) -> Self {
        Self::from_value(len, 0)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The string read as a binary numeral; its index within its level.
    pub fn value(&self) -> u64 {
        self.bits
    }

    /// Bit at position `i` (0 is the first bit).
    pub fn bit(&self, i: usize) -> u8 {
        assert!(i < self.len());
        ((self.bits >> (self.len() - 1 - i)) & 1) as u8
    }

    pub fn child(&self, b: u8) -> Self {
        assert!(self.len() < Self::MAX_LEN, "bit string longer than {}", Self::MAX_LEN);
        BitString { len: self.len + 1, bits: (self.bits << 1) | (b & 1) as u64 }
    }

    pub fn parent(&self) -> Option<Self> {
        if self.len == 0 {
            None
        } else {
            Some(BitString { len: self.len - 1, bits: self.bits >> 1 })
        }
    }

    /// The prefix of length `k` (`σ↾k`).
    pub fn prefix(&self, k: usize) -> Self {
        assert!(k <= self.len());
        if k == 0 {
            return Self::empty();
        }
        BitString { len: k as u8, bits: self.bits >> (self.len() - k) }
    }

    /// `self ⪯ other`.
    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        self.len <= other.len && other.prefix(self.len()) == *self
    }

    /// `self ≺ other`.
    pub fn is_strict_prefix_of(&self, other: &BitString) -> bool {
        self.len < other.len && self.is_prefix_of(other)
    }

    /// True when neither string extends the other.
    pub fn incomparable(&self, other: &BitString) -> bool {
        !self.is_prefix_of(other) && !other.is_prefix_of(self)
    }

    pub fn concat(&self, tail: &BitString) -> Self {
        assert!(self.len() + tail.len() <= Self::MAX_LEN, "bit string longer than {}", Self::MAX_LEN);
        if tail.len == 0 {
            return *self;
        }
        let shifted = if tail.len() == 64 { 0 } else { self.bits << tail.len() };
        BitString { len: self.len + tail.len, bits: shifted | tail.bits }
    }

    /// The suffix after position `k`.
    pub fn suffix_from(&self, k: usize) -> Self {
        assert!(k <= self.len());
        let n = self.len() - k;
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        BitString { len: n as u8, bits: self.bits & mask }
    }

    /// All strings of length `len`, in lexicographic order.
    pub fn level(len: usize) -> impl Iterator<Item = BitString> {
        assert!(len < Self::MAX_LEN);
        (0..(1u64 << len)).map(move |v| BitString::from_value(len, v))
    }

    /// All extensions of `self` of length `len`, in lexicographic order.
    pub fn extensions(&self, len: usize) -> impl Iterator<Item = BitString> {
        assert!(len >= self.len() && len < Self::MAX_LEN);
        let extra = len - self.len();
        let base = self.bits << extra;
        (0..(1u64 << extra)).map(move |v| BitString::from_value(len, base | v))
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.len()).map(move |i| self.bit(i))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len == 0 {
            return f.write_str("e");
        }
        for b in self.iter() {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{}\"", self)
    }
}

impl FromStr for BitString {
    type Err = Error;

    /// Parses an ASCII 0/1 string; `"e"` (or `""`) is the empty string.
    fn from_str(s: &str) -> Result<Self, Error> {
        if s == "e" || s.is_empty() {
            return Ok(Self::empty());
        }
        if s.len() > Self::MAX_LEN {
            return Err(Error::Parse { what: "bit string", input: s.to_string() });
        }
        let mut out = Self::empty();
        for c in s.chars() {
            out = match c {
                '0' => out.child(0),
                '1' => out.child(1),
                _ => return Err(Error::Parse { what: "bit string", input: s.to_string() }),
            };
        }
        Ok(out)
    }
}

impl serde::Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Shorthand for literals in tests and fixtures; panics on malformed input.
pub fn bs(s: &str) -> BitString {
    s.parse().expect("malformed bit string literal")
}
