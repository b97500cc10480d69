//! The keyed function family `f_k : {0,1}^n -> {0,1}^n`, bitmask vectors and
//! the chaining function `c_k^i(x, r)`.
//!
//! Both family variants compute
//!
//! ```text
//! f_k(x) = first n bits of SHA-256(DOMAIN_TAG || u16_be(n) || k || x)
//! ```
//!
//! where `x` is the right-aligned big-endian byte form of the input (see
//! [`BitString`]) and the output's padding bits are cleared. Production keys
//! are `n / 8` bytes; toy keys are [`TOY_KEY_BYTES`] bytes so that distinct
//! seeds give distinct functions even when `n` is tiny.

use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bits::BitString;
use crate::error::{Error, Result};

pub const DOMAIN_TAG: &[u8] = b"wotsplus/f_k/v1";

/// Key size of the toy family.
pub const TOY_KEY_BYTES: usize = 16;

/// Largest `n` the toy family accepts; also the limit for exhaustive search.
pub const TOY_MAX_BITS: usize = 20;

pub const PRODUCTION_BITS: [usize; 3] = [128, 192, 256];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyVariant {
    Production,
    Toy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FamilySpec {
    variant: FamilyVariant,
    n: usize,
}

impl FamilySpec {
    pub fn new(variant: FamilyVariant, n: usize) -> Result<Self> {
        let ok = match variant {
            FamilyVariant::Production => PRODUCTION_BITS.contains(&n),
            FamilyVariant::Toy => (crate::params::MIN_N..=TOY_MAX_BITS).contains(&n),
        };
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "n = {n} not supported by the {variant:?} family"
            )));
        }
        Ok(Self { variant, n })
    }

    /// Picks the variant that supports `n`.
    pub fn for_bits(n: usize) -> Result<Self> {
        if n <= TOY_MAX_BITS {
            Self::new(FamilyVariant::Toy, n)
        } else {
            Self::new(FamilyVariant::Production, n)
        }
    }

    pub fn variant(&self) -> FamilyVariant {
        self.variant
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn key_bytes(&self) -> usize {
        match self.variant {
            FamilyVariant::Production => self.n / 8,
            FamilyVariant::Toy => TOY_KEY_BYTES,
        }
    }
}

/// Identifies one member `f_k` of the family.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FamilyKey {
    spec: FamilySpec,
    bytes: Vec<u8>,
}

impl FamilyKey {
    pub fn sample<R: RngCore + CryptoRng + ?Sized>(spec: FamilySpec, rng: &mut R) -> Self {
        let mut bytes = vec![0u8; spec.key_bytes()];
        rng.fill_bytes(&mut bytes);
        Self { spec, bytes }
    }

    pub fn from_bytes(spec: FamilySpec, bytes: Vec<u8>) -> Result<Self> {
        if bytes.len() != spec.key_bytes() {
            return Err(Error::InvalidLength {
                expected: spec.key_bytes() * 8,
                actual: bytes.len() * 8,
            });
        }
        Ok(Self { spec, bytes })
    }

    pub fn spec(&self) -> FamilySpec {
        self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn evaluate(&self, x: &BitString) -> Result<BitString> {
        self.check_len(x)?;
        Ok(self.apply(x))
    }

    /// `f_k(x)` for an input already known to be `n` bits.
    pub(crate) fn apply(&self, x: &BitString) -> BitString {
        debug_assert_eq!(x.len(), self.spec.n);
        let digest = Sha256::new()
            .chain_update(DOMAIN_TAG)
            .chain_update((self.spec.n as u16).to_be_bytes())
            .chain_update(&self.bytes)
            .chain_update(x.as_bytes())
            .finalize();
        BitString::truncate_from(self.spec.n, &digest)
    }

    pub(crate) fn check_len(&self, x: &BitString) -> Result<()> {
        if x.len() != self.spec.n {
            return Err(Error::InvalidLength {
                expected: self.spec.n,
                actual: x.len(),
            });
        }
        Ok(())
    }
}

/// Running count of `f_k` evaluations, owned and accumulated by the caller.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EvalCount(u64);

impl EvalCount {
    pub fn new() -> Self {
        Self(0)
    }

    pub fn add(&mut self, n: u64) {
        self.0 += n;
    }

    pub fn get(&self) -> u64 {
        self.0
    }
}

/// The bitmasks `r_1 .. r_{w-1}`. Indexed by chain level, starting at 1:
/// `r_j` is XORed in on the step that produces the level-`j` node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitmaskVector {
    masks: Vec<BitString>,
}

impl BitmaskVector {
    pub fn sample<R: RngCore + ?Sized>(n: usize, w: u32, rng: &mut R) -> Self {
        Self {
            masks: (1..w).map(|_| BitString::random(n, rng)).collect(),
        }
    }

    pub fn from_masks(masks: Vec<BitString>) -> Result<Self> {
        if let Some(first) = masks.first() {
            if let Some(bad) = masks.iter().find(|m| m.len() != first.len()) {
                return Err(Error::InvalidLength {
                    expected: first.len(),
                    actual: bad.len(),
                });
            }
        }
        Ok(Self { masks })
    }

    /// Number of masks, `w - 1`.
    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    /// `r_level`, for `1 <= level <= w - 1`.
    pub fn get(&self, level: usize) -> &BitString {
        &self.masks[level - 1]
    }

    pub fn replace(&mut self, level: usize, value: BitString) {
        assert_eq!(value.len(), self.masks[level - 1].len());
        self.masks[level - 1] = value;
    }

    pub fn iter(&self) -> impl Iterator<Item = &BitString> {
        self.masks.iter()
    }

    fn check_range(&self, start_level: usize, steps: usize) -> Result<()> {
        if start_level + steps > self.masks.len() {
            return Err(Error::MaskRange {
                first: start_level + 1,
                last: start_level + steps,
                available: self.masks.len(),
            });
        }
        Ok(())
    }
}

/// Walks `steps` links up a chain from a node `x` sitting at `start_level`:
/// step `j` computes `f_k(prev XOR r_{start_level + j})`. With `start_level = 0`
/// this is `c_k^steps(x, r)`; `steps = 0` returns `x`.
pub fn chain(
    key: &FamilyKey,
    x: &BitString,
    masks: &BitmaskVector,
    start_level: usize,
    steps: usize,
    count: &mut EvalCount,
) -> Result<BitString> {
    key.check_len(x)?;
    masks.check_range(start_level, steps)?;
    let mut node = x.clone();
    for level in start_level + 1..=start_level + steps {
        node = key.apply(&node.xor(masks.get(level)));
    }
    count.add(steps as u64);
    Ok(node)
}

/// Like [`chain`] but returns every node visited, from `x` itself to the
/// level `start_level + steps` node (`steps + 1` entries).
pub fn chain_nodes(
    key: &FamilyKey,
    x: &BitString,
    masks: &BitmaskVector,
    start_level: usize,
    steps: usize,
    count: &mut EvalCount,
) -> Result<Vec<BitString>> {
    key.check_len(x)?;
    masks.check_range(start_level, steps)?;
    let mut nodes = Vec::with_capacity(steps + 1);
    nodes.push(x.clone());
    for level in start_level + 1..=start_level + steps {
        let next = key.apply(&nodes[nodes.len() - 1].xor(masks.get(level)));
        nodes.push(next);
    }
    count.add(steps as u64);
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn toy(n: usize) -> FamilySpec {
        FamilySpec::new(FamilyVariant::Toy, n).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(FamilySpec::new(FamilyVariant::Production, 256).is_ok());
        assert!(FamilySpec::new(FamilyVariant::Production, 100).is_err());
        assert!(FamilySpec::new(FamilyVariant::Toy, 21).is_err());
        assert_eq!(FamilySpec::for_bits(192).unwrap().variant(), FamilyVariant::Production);
    }

    #[test]
    fn sample_key_is_seed_deterministic() {
        let a = FamilyKey::sample(toy(8), &mut ChaCha20Rng::seed_from_u64(7));
        let b = FamilyKey::sample(toy(8), &mut ChaCha20Rng::seed_from_u64(7));
        let c = FamilyKey::sample(toy(8), &mut ChaCha20Rng::seed_from_u64(8));
        assert_eq!(a, b);
        assert_ne!(a, c);
        let p = FamilyKey::sample(
            FamilySpec::new(FamilyVariant::Production, 256).unwrap(),
            &mut ChaCha20Rng::seed_from_u64(7),
        );
        assert_eq!(p.as_bytes().len(), 32);
    }

    #[test]
    fn evaluate_is_deterministic_and_length_checked() {
        let key = FamilyKey::sample(toy(12), &mut ChaCha20Rng::seed_from_u64(1));
        let x = BitString::from_u64(12, 0x5a5);
        assert_eq!(key.evaluate(&x).unwrap(), key.evaluate(&x).unwrap());
        assert_eq!(key.evaluate(&x).unwrap().len(), 12);
        assert_eq!(
            key.evaluate(&BitString::from_u64(8, 1)),
            Err(Error::InvalidLength { expected: 12, actual: 8 })
        );
    }

    #[test]
    fn evaluate_bit_exact_against_direct_hash() {
        let key = FamilyKey::from_bytes(toy(12), (0u8..16).collect()).unwrap();
        let x = BitString::from_u64(12, 0xabc);
        let mut h = Sha256::new();
        h.update(b"wotsplus/f_k/v1");
        h.update([0x00, 0x0c]);
        h.update((0u8..16).collect::<Vec<_>>());
        h.update([0x0a, 0xbc]);
        let d = h.finalize();
        let expected = (((d[0] & 0x0f) as u64) << 8) | d[1] as u64;
        assert_eq!(key.evaluate(&x).unwrap().to_u64(), Some(expected));
    }

    #[test]
    fn chain_zero_and_one_step() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let key = FamilyKey::sample(toy(8), &mut rng);
        let masks = BitmaskVector::sample(8, 4, &mut rng);
        let x = BitString::random(8, &mut rng);
        let mut count = EvalCount::new();
        assert_eq!(chain(&key, &x, &masks, 0, 0, &mut count).unwrap(), x);
        for start in 0..3 {
            let one = chain(&key, &x, &masks, start, 1, &mut count).unwrap();
            assert_eq!(one, key.evaluate(&x.xor(masks.get(start + 1))).unwrap());
        }
        assert_eq!(count.get(), 3);
    }

    #[test]
    fn chain_mask_range() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let key = FamilyKey::sample(toy(8), &mut rng);
        let masks = BitmaskVector::sample(8, 4, &mut rng);
        let x = BitString::random(8, &mut rng);
        let mut count = EvalCount::new();
        assert!(matches!(
            chain(&key, &x, &masks, 2, 2, &mut count),
            Err(Error::MaskRange { first: 3, last: 4, available: 3 })
        ));
        assert_eq!(count.get(), 0);
    }

    #[test]
    fn chain_nodes_agree_with_chain() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let key = FamilyKey::sample(toy(10), &mut rng);
        let masks = BitmaskVector::sample(10, 8, &mut rng);
        let x = BitString::random(10, &mut rng);
        let mut count = EvalCount::new();
        let nodes = chain_nodes(&key, &x, &masks, 1, 5, &mut count).unwrap();
        for (j, node) in nodes.iter().enumerate() {
            assert_eq!(*node, chain(&key, &x, &masks, 1, j, &mut count).unwrap());
        }
    }
}
