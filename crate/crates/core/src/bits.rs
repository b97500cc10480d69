//! Fixed-length bit strings.
//!
//! A [`BitString`] of `len` bits is stored big-endian in `ceil(len / 8)` bytes
//! and is right-aligned: when `len` is not a multiple of eight, the unused
//! high-order bits of the first byte are always zero. Chain nodes, bitmasks
//! and messages all use this representation.

use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    len: usize,
    bytes: Vec<u8>,
}

pub(crate) fn byte_len(bits: usize) -> usize {
    bits.div_ceil(8)
}

fn top_mask(bits: usize) -> u8 {
    match bits % 8 {
        0 => 0xff,
        r => (1u8 << r) - 1,
    }
}

impl BitString {
    /// Wraps `bytes` as a `len`-bit string. Fails if the byte count is wrong or
    /// any padding bit is set.
    pub fn from_bytes(len: usize, bytes: Vec<u8>) -> Result<Self> {
        if bytes.len() != byte_len(len) {
            return Err(Error::InvalidLength {
                expected: len,
                actual: bytes.len() * 8,
            });
        }
        if let Some(first) = bytes.first() {
            if first & !top_mask(len) != 0 {
                return Err(Error::InvalidParameter(format!(
                    "padding bits set in {len}-bit string"
                )));
            }
        }
        Ok(Self { len, bytes })
    }

    /// Takes the leading `ceil(len / 8)` bytes of `digest` and clears the
    /// padding bits. `digest` must be at least that long.
    pub(crate) fn truncate_from(len: usize, digest: &[u8]) -> Self {
        let mut bytes = digest[..byte_len(len)].to_vec();
        if let Some(first) = bytes.first_mut() {
            *first &= top_mask(len);
        }
        Self { len, bytes }
    }

    pub fn zero(len: usize) -> Self {
        Self {
            len,
            bytes: vec![0; byte_len(len)],
        }
    }

    /// Builds a string from the low `len` bits of `value`. `len` must be at most 64.
    pub fn from_u64(len: usize, value: u64) -> Self {
        assert!(len <= 64, "from_u64 supports at most 64 bits");
        let value = if len == 64 { value } else { value & ((1u64 << len) - 1) };
        let be = value.to_be_bytes();
        Self {
            len,
            bytes: be[8 - byte_len(len)..].to_vec(),
        }
    }

    /// Interprets the string as an unsigned integer. Returns `None` above 64 bits.
    pub fn to_u64(&self) -> Option<u64> {
        (self.len <= 64).then(|| self.bytes.iter().fold(0u64, |acc, b| (acc << 8) | *b as u64))
    }

    pub fn random<R: RngCore + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut bytes = vec![0u8; byte_len(len)];
        rng.fill_bytes(&mut bytes);
        if let Some(first) = bytes.first_mut() {
            *first &= top_mask(len);
        }
        Self { len, bytes }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    /// Bitwise XOR. Panics if the lengths differ.
    pub fn xor(&self, other: &BitString) -> BitString {
        assert_eq!(self.len, other.len, "xor of bit strings with different lengths");
        Self {
            len: self.len,
            bytes: self.bytes.iter().zip(&other.bytes).map(|(a, b)| a ^ b).collect(),
        }
    }

    /// Bit `index` counted from the least significant end.
    pub fn bit_lsb(&self, index: usize) -> bool {
        if index >= self.len {
            return false;
        }
        let byte = self.bytes[self.bytes.len() - 1 - index / 8];
        (byte >> (index % 8)) & 1 == 1
    }

    /// Extracts `width` bits starting at LSB-offset `shift`. Bits beyond the
    /// string read as zero, which is what left-padding to a digit boundary needs.
    pub(crate) fn window_lsb(&self, shift: usize, width: usize) -> u64 {
        (0..width).fold(0u64, |acc, j| acc | ((self.bit_lsb(shift + j) as u64) << j))
    }

    /// Flips bit `index`, counted from the least significant end.
    pub fn flip_bit(&mut self, index: usize) {
        assert!(index < self.len, "bit index {index} out of range");
        let pos = self.bytes.len() - 1 - index / 8;
        self.bytes[pos] ^= 1 << (index % 8);
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.bytes)
    }
}

#[derive(Serialize, Deserialize)]
struct HexForm {
    bits: usize,
    hex: String,
}

/// Serialized as `{"bits": len, "hex": "<big-endian bytes>"}`.
impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        HexForm {
            bits: self.len,
            hex: self.to_hex(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let form = HexForm::deserialize(d)?;
        let bytes = hex::decode(&form.hex).map_err(D::Error::custom)?;
        BitString::from_bytes(form.bits, bytes).map_err(D::Error::custom)
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({}:{})", self.len, self.to_hex())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}
