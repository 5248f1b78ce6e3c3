use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use super::DyadicError;

/// Longest string a [`BitString`] can hold.
pub const MAX_LEN: u32 = 64;

/// A finite binary string, also read as a vertex of the full binary tree.
///
/// Bits are stored right-aligned in a `u64`, first bit most significant.
/// The derived `Ord` is shortlex: shorter strings first, then by value,
/// which is the "lexicographic by level" order used for tie-breaking.
/// Use [`BitString::tree_cmp`] for the dictionary (left-to-right) order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    len: u8,
    value: u64,
}

impl BitString {
    pub const EMPTY: BitString = BitString { len: 0, value: 0 };

    /// Builds the `len`-bit string whose binary value is `value`.
    ///
    /// Returns `None` when `len > 64` or `value` does not fit in `len` bits.
    pub fn from_value(value: u64, len: u32) -> Option<BitString> {
        if len > MAX_LEN {
            return None;
        }
        if len < 64 && value >> len != 0 {
            return None;
        }
        Some(BitString {
            len: len as u8,
            value,
        })
    }

    pub fn len(&self) -> u32 {
        u32::from(self.len)
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Binary value of the string (its rank among strings of the same length).
    pub fn value(&self) -> u64 {
        self.value
    }

    /// Bit `i`, counting from the root (`i = 0` is the first bit).
    pub fn bit(&self, i: u32) -> bool {
        assert!(i < self.len(), "bit index {i} out of range for length {}", self.len);
        (self.value >> (self.len() - 1 - i)) & 1 == 1
    }

    /// Appends one bit. Panics past [`MAX_LEN`].
    pub fn child(&self, bit: bool) -> BitString {
        assert!(self.len() < MAX_LEN, "bit string longer than {MAX_LEN}");
        BitString {
            len: self.len + 1,
            value: (self.value << 1) | u64::from(bit),
        }
    }

    /// The first `n` bits. Panics if `n > len`.
    pub fn prefix(&self, n: u32) -> BitString {
        assert!(n <= self.len(), "prefix length {n} exceeds {}", self.len);
        let shift = self.len() - n;
        BitString {
            len: n as u8,
            value: if shift == 64 { 0 } else { self.value >> shift },
        }
    }

    /// All prefixes from the root down to `self`, inclusive.
    pub fn prefixes(&self) -> impl Iterator<Item = BitString> + '_ {
        (0..=self.len()).map(move |n| self.prefix(n))
    }

    /// Appends the low `k` bits of `suffix`.
    pub fn concat_value(&self, suffix: u64, k: u32) -> BitString {
        let len = self.len() + k;
        assert!(len <= MAX_LEN, "bit string longer than {MAX_LEN}");
        if k == 0 {
            return *self;
        }
        let head = if k == 64 { 0 } else { self.value << k };
        let tail = if k == 64 { suffix } else { suffix & ((1u64 << k) - 1) };
        BitString {
            len: len as u8,
            value: head | tail,
        }
    }

    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        self.len <= other.len && other.prefix(self.len()) == *self
    }

    /// True when one of the two strings is a prefix of the other.
    pub fn comparable(&self, other: &BitString) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    /// Dictionary order on the tree: a prefix precedes its extensions,
    /// otherwise the first differing bit decides.
    pub fn tree_cmp(&self, other: &BitString) -> Ordering {
        let common = self.len().min(other.len());
        self.prefix(common)
            .value
            .cmp(&other.prefix(common).value)
            .then(self.len.cmp(&other.len))
    }

    /// Left endpoint of `I_x` scaled by `2^64`.
    pub(crate) fn interval_start(&self) -> u128 {
        u128::from(self.value) << (MAX_LEN - self.len())
    }

    /// Length of `I_x` scaled by `2^64`.
    pub(crate) fn interval_span(&self) -> u128 {
        1u128 << (MAX_LEN - self.len())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len == 0 {
            return f.write_str("eps");
        }
        for i in 0..self.len() {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
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
    type Err = DyadicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "eps" {
            return Ok(BitString::EMPTY);
        }
        if s.is_empty() {
            return Err(DyadicError::Parse(
                "empty token; write `eps` for the empty string".into(),
            ));
        }
        if s.len() > MAX_LEN as usize {
            return Err(DyadicError::Parse(format!(
                "`{s}` is longer than {MAX_LEN} bits"
            )));
        }
        let mut out = BitString::EMPTY;
        for ch in s.chars() {
            out = match ch {
                '0' => out.child(false),
                '1' => out.child(true),
                _ => return Err(DyadicError::Parse(format!("`{s}` is not a binary string"))),
            };
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(b("eps"), BitString::EMPTY);
        assert_eq!(b("0110").to_string(), "0110");
        assert_eq!(b("0110").value(), 6);
        assert!("012".parse::<BitString>().is_err());
        assert!("".parse::<BitString>().is_err());
        let long = "1".repeat(64);
        assert_eq!(b(&long).value(), u64::MAX);
        assert!("1".repeat(65).parse::<BitString>().is_err());
    }

    #[test]
    fn prefixes_and_order() {
        assert!(b("01").is_prefix_of(&b("011")));
        assert!(BitString::EMPTY.is_prefix_of(&b("1")));
        assert!(!b("1").is_prefix_of(&b("01")));
        assert!(b("011").comparable(&b("01")));
        assert!(!b("00").comparable(&b("01")));
        assert_eq!(b("0110").prefix(2), b("01"));
        assert_eq!(b("0110").prefix(0), BitString::EMPTY);

        // shortlex
        assert!(b("1") < b("00"));
        // tree order
        assert_eq!(b("1").tree_cmp(&b("00")), Ordering::Greater);
        assert_eq!(b("0").tree_cmp(&b("01")), Ordering::Less);
        assert_eq!(b("01").tree_cmp(&b("1")), Ordering::Less);
    }

    #[test]
    fn concat_and_intervals() {
        assert_eq!(b("1").concat_value(0b01, 2), b("101"));
        assert_eq!(BitString::EMPTY.interval_span(), 1u128 << 64);
        assert_eq!(b("1").interval_start(), 1u128 << 63);
        assert_eq!(b(&"1".repeat(64)).interval_span(), 1);
    }
}
