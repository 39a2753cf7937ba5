//! Binary codes, per-bit weights, and the Hamming / weighted Hamming distances.
//!
//! Bit positions are 1-based in the public API. Position `j` is stored in
//! bit `j - 1` of a `u128`, so position 1 is the least significant bit. The
//! same order is used by the on-disk code format (bit 1 is the LSB of byte 0)
//! and by the textual form, which lists positions 1..=width left to right.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Weight;

/// Widest code supported (two 64-bit words).
pub const MAX_WIDTH: usize = 128;

#[inline]
pub(crate) fn low_mask(width: usize) -> u128 {
    if width >= 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

/// A fixed-width bit string of 1 to 128 bits.
///
/// Bits above `width` are always zero, so derived equality and hashing are
/// bitwise over positions `1..=width`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinaryCode {
    bits: u128,
    width: u8,
}

impl BinaryCode {
    /// The all-zero code of the given width.
    pub fn zeros(width: usize) -> Result<Self> {
        Self::from_bits(width, 0)
    }

    /// Builds a code from its packed representation (position 1 = bit 0).
    pub fn from_bits(width: usize, bits: u128) -> Result<Self> {
        if width == 0 || width > MAX_WIDTH {
            return Err(Error::UnsupportedWidth(width));
        }
        if bits & !low_mask(width) != 0 {
            return Err(Error::NonCanonicalBits { width });
        }
        Ok(Self {
            bits,
            width: width as u8,
        })
    }

    /// Packed constructor for callers that already guarantee canonical bits.
    #[inline]
    pub(crate) fn from_raw(width: usize, bits: u128) -> Self {
        debug_assert!((1..=MAX_WIDTH).contains(&width));
        debug_assert_eq!(bits & !low_mask(width), 0);
        Self {
            bits,
            width: width as u8,
        }
    }

    /// Builds a code from `bool`s listed for positions 1..=n.
    pub fn from_bools(bits: &[bool]) -> Result<Self> {
        let packed = bits
            .iter()
            .enumerate()
            .fold(0u128, |acc, (j, &b)| acc | (u128::from(b) << j.min(127)));
        Self::from_bits(bits.len(), packed)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width as usize
    }

    /// Packed bits; position `j` is bit `j - 1`.
    #[inline]
    pub fn bits(&self) -> u128 {
        self.bits
    }

    /// Value of bit `position` (1-based).
    pub fn get(&self, position: usize) -> Result<bool> {
        self.check_position(position)?;
        Ok((self.bits >> (position - 1)) & 1 == 1)
    }

    /// Returns a copy with bit `position` (1-based) inverted.
    pub fn flip(&self, position: usize) -> Result<Self> {
        self.check_position(position)?;
        Ok(Self {
            bits: self.bits ^ (1u128 << (position - 1)),
            width: self.width,
        })
    }

    /// The contiguous slice of `len` bits starting at position `start`.
    pub fn substring(&self, start: usize, len: usize) -> Result<Self> {
        let width = self.width();
        if start == 0 || len == 0 || start + len - 1 > width {
            return Err(Error::SliceOutOfRange { start, len, width });
        }
        Ok(Self::from_raw(len, (self.bits >> (start - 1)) & low_mask(len)))
    }

    /// Concatenates codes so that `parts[0]` occupies the lowest positions.
    pub fn concat(parts: &[BinaryCode]) -> Result<Self> {
        let width: usize = parts.iter().map(BinaryCode::width).sum();
        if width == 0 || width > MAX_WIDTH {
            return Err(Error::UnsupportedWidth(width));
        }
        let mut bits = 0u128;
        let mut shift = 0;
        for part in parts {
            bits |= part.bits << shift;
            shift += part.width();
        }
        Ok(Self::from_raw(width, bits))
    }

    /// Number of set bits.
    #[inline]
    pub fn count_ones(&self) -> u32 {
        self.bits.count_ones()
    }

    /// Little-endian byte image, `ceil(width / 8)` bytes.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let n = self.width().div_ceil(8);
        self.bits.to_le_bytes()[..n].to_vec()
    }

    /// Inverse of [`BinaryCode::to_le_bytes`].
    pub fn from_le_bytes(width: usize, bytes: &[u8]) -> Result<Self> {
        if width == 0 || width > MAX_WIDTH {
            return Err(Error::UnsupportedWidth(width));
        }
        let n = width.div_ceil(8);
        if bytes.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bytes.len(),
            });
        }
        let mut buf = [0u8; 16];
        buf[..n].copy_from_slice(bytes);
        Self::from_bits(width, u128::from_le_bytes(buf))
    }

    fn check_position(&self, position: usize) -> Result<()> {
        if position == 0 || position > self.width() {
            return Err(Error::BitOutOfRange {
                position,
                width: self.width(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_width(&self, expected: usize) -> Result<()> {
        if self.width() != expected {
            return Err(Error::WidthMismatch {
                expected,
                found: self.width(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for BinaryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.width() {
            f.write_str(if (self.bits >> j) & 1 == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BinaryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryCode({self})")
    }
}

impl FromStr for BinaryCode {
    type Err = Error;

    /// Parses `'0'`/`'1'` characters listed for positions 1..=n.
    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .enumerate()
            .map(|(i, c)| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::InvalidParameter(format!(
                    "invalid character {c:?} at index {i} in binary code"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bools(&bits)
    }
}

/// Non-negative per-bit weights, one per code position.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector<T> {
    weights: Vec<T>,
}

impl<T: Weight> WeightVector<T> {
    /// Validates that every weight is finite and `>= 0`.
    pub fn new(weights: Vec<T>) -> Result<Self> {
        if weights.is_empty() || weights.len() > MAX_WIDTH {
            return Err(Error::UnsupportedWidth(weights.len()));
        }
        for (index, &w) in weights.iter().enumerate() {
            if !w.as_f64().is_finite() {
                return Err(Error::NonFiniteWeight { index });
            }
            if w < T::zero() {
                return Err(Error::NegativeWeight { index });
            }
        }
        Ok(Self { weights })
    }

    /// All weights one: the weighted distance degenerates to Hamming distance.
    pub fn uniform(width: usize) -> Result<Self> {
        Self::new(vec![T::one(); width])
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.weights
    }

    pub fn into_vec(self) -> Vec<T> {
        self.weights
    }

    /// Weight of position `position` (1-based).
    pub fn get(&self, position: usize) -> Option<T> {
        position
            .checked_sub(1)
            .and_then(|i| self.weights.get(i))
            .copied()
    }

    /// Weights of positions `start..start + len`, in their original order.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        let width = self.width();
        if start == 0 || len == 0 || start + len - 1 > width {
            return Err(Error::SliceOutOfRange { start, len, width });
        }
        Ok(Self {
            weights: self.weights[start - 1..start - 1 + len].to_vec(),
        })
    }

    /// Sum of the weights at the set bits of `mask` (bit `j - 1` for position
    /// `j`), one addition per set bit. Bits beyond the width are ignored.
    #[inline]
    pub fn masked_sum(&self, mask: u128) -> T {
        let w = &self.weights;
        let mut acc = T::zero();
        let mut x = mask & low_mask(w.len());
        while x != 0 {
            acc = acc + w[x.trailing_zeros() as usize];
            x &= x - 1;
        }
        acc
    }
}

/// Number of positions where `q` and `g` differ.
pub fn hamming_distance(q: &BinaryCode, g: &BinaryCode) -> Result<u32> {
    g.check_width(q.width())?;
    Ok((q.bits ^ g.bits).count_ones())
}

/// Sum of `w_j` over the positions where `q` and `g` differ.
pub fn weighted_distance<T: Weight>(q: &BinaryCode, g: &BinaryCode, w: &WeightVector<T>) -> Result<T> {
    g.check_width(q.width())?;
    if w.width() != q.width() {
        return Err(Error::WidthMismatch {
            expected: q.width(),
            found: w.width(),
        });
    }
    Ok(w.masked_sum(q.bits ^ g.bits))
}

/// `h` with bit `position` (1-based) inverted.
pub fn flip_bit(h: &BinaryCode, position: usize) -> Result<BinaryCode> {
    h.flip(position)
}

/// The `len`-bit slice of `g` starting at 1-based `start`.
pub fn extract_substring(g: &BinaryCode, start: usize, len: usize) -> Result<BinaryCode> {
    g.substring(start, len)
}
