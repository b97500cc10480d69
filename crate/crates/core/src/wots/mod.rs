//! W-OTS+ key generation, signing and verification.
//!
//! Every operation has a `*_counted` form that adds the number of `f_k`
//! evaluations it performed to a caller-owned [`EvalCount`].

mod encoding;

use rand::{CryptoRng, RngCore};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::hash_family::{chain, BitmaskVector, EvalCount, FamilyKey};
use crate::params::{encode, BaseWDigits, Params};

pub use encoding::{ENCODING_VERSION, KIND_PUBLIC_KEY, KIND_SECRET_KEY, KIND_SIGNATURE, MAGIC};

/// Secret chain seeds `sk_1 .. sk_l` together with the public randomness
/// `(r, k)` needed to sign, and the one-time flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecretKey {
    params: Params,
    key: FamilyKey,
    masks: BitmaskVector,
    seeds: Vec<BitString>,
    used: bool,
}

/// `pk_0 = (r, k)` plus the chain ends `pk_1 .. pk_l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKey {
    params: Params,
    key: FamilyKey,
    masks: BitmaskVector,
    ends: Vec<BitString>,
}

/// Chain nodes `sigma_1 .. sigma_l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    params: Params,
    nodes: Vec<BitString>,
}

pub fn keygen<R: RngCore + CryptoRng>(params: &Params, rng: &mut R) -> (SecretKey, PublicKey) {
    keygen_counted(params, rng, &mut EvalCount::new())
}

/// Samples `k`, `r` and the seeds, then computes `pk_i = c^{w-1}(sk_i, r)`.
/// Costs exactly `l (w - 1)` evaluations.
pub fn keygen_counted<R: RngCore + CryptoRng>(
    params: &Params,
    rng: &mut R,
    count: &mut EvalCount,
) -> (SecretKey, PublicKey) {
    let key = FamilyKey::sample(params.family(), rng);
    let masks = BitmaskVector::sample(params.n(), params.w(), rng);
    let seeds = (0..params.l()).map(|_| BitString::random(params.n(), rng)).collect();
    keypair_from_parts(params, key, masks, seeds, count)
}

/// Builds a key pair from already-sampled parts. The reduction machines use
/// this to run key generation with a given `k` and `r`.
pub fn keypair_from_parts(
    params: &Params,
    key: FamilyKey,
    masks: BitmaskVector,
    seeds: Vec<BitString>,
    count: &mut EvalCount,
) -> (SecretKey, PublicKey) {
    let ends = seeds
        .iter()
        .map(|s| chain(&key, s, &masks, 0, params.chain_len(), count).expect("parts sized by params"))
        .collect();
    let sk = SecretKey {
        params: *params,
        key: key.clone(),
        masks: masks.clone(),
        seeds,
        used: false,
    };
    let pk = PublicKey {
        params: *params,
        key,
        masks,
        ends,
    };
    (sk, pk)
}

/// `sigma_i = c^{b_i}(sk_i, r)`, the signing core without one-time bookkeeping.
pub(crate) fn sign_digits(
    key: &FamilyKey,
    masks: &BitmaskVector,
    seeds: &[BitString],
    digits: &BaseWDigits,
    count: &mut EvalCount,
) -> Vec<BitString> {
    seeds
        .iter()
        .zip(digits.as_slice())
        .map(|(s, b)| chain(key, s, masks, 0, *b as usize, count).expect("digit below w"))
        .collect()
}

impl SecretKey {
    pub(crate) fn from_parts(
        params: Params,
        key: FamilyKey,
        masks: BitmaskVector,
        seeds: Vec<BitString>,
        used: bool,
    ) -> Self {
        Self {
            params,
            key,
            masks,
            seeds,
            used,
        }
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn family_key(&self) -> &FamilyKey {
        &self.key
    }

    pub fn masks(&self) -> &BitmaskVector {
        &self.masks
    }

    pub fn seeds(&self) -> &[BitString] {
        &self.seeds
    }

    pub fn is_used(&self) -> bool {
        self.used
    }

    pub fn sign(&mut self, message: &BitString) -> Result<Signature> {
        self.sign_counted(message, &mut EvalCount::new())
    }

    /// Signs once. The key is marked used before the signature is returned; a
    /// second call fails with [`Error::KeyAlreadyUsed`]. Costs `sum(b_i)`
    /// evaluations.
    pub fn sign_counted(&mut self, message: &BitString, count: &mut EvalCount) -> Result<Signature> {
        if self.used {
            return Err(Error::KeyAlreadyUsed);
        }
        let digits = encode(message, &self.params)?;
        self.used = true;
        Ok(Signature {
            params: self.params,
            nodes: sign_digits(&self.key, &self.masks, &self.seeds, &digits, count),
        })
    }

    /// Recomputes the public key. Costs `l (w - 1)` evaluations.
    pub fn public_key(&self) -> PublicKey {
        keypair_from_parts(
            &self.params,
            self.key.clone(),
            self.masks.clone(),
            self.seeds.clone(),
            &mut EvalCount::new(),
        )
        .1
    }
}

impl PublicKey {
    pub(crate) fn from_parts(
        params: Params,
        key: FamilyKey,
        masks: BitmaskVector,
        ends: Vec<BitString>,
    ) -> Self {
        Self {
            params,
            key,
            masks,
            ends,
        }
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn family_key(&self) -> &FamilyKey {
        &self.key
    }

    pub fn masks(&self) -> &BitmaskVector {
        &self.masks
    }

    pub fn chain_ends(&self) -> &[BitString] {
        &self.ends
    }

    pub fn verify(&self, sig: &Signature, message: &BitString) -> bool {
        self.verify_counted(sig, message, &mut EvalCount::new())
    }

    /// Accepts iff `pk_i = c^{w-1-b_i}(sigma_i, r_{b_i+1 .. w-1})` for every `i`.
    /// Any structural mismatch rejects. Costs at most `sum(w - 1 - b_i)`
    /// evaluations, fewer when an early chain already fails.
    pub fn verify_counted(&self, sig: &Signature, message: &BitString, count: &mut EvalCount) -> bool {
        if sig.params != self.params || sig.nodes.len() != self.ends.len() {
            return false;
        }
        let Ok(digits) = encode(message, &self.params) else {
            return false;
        };
        let top = self.params.chain_len();
        sig.nodes
            .iter()
            .zip(digits.as_slice())
            .zip(&self.ends)
            .all(|((node, b), end)| {
                let b = *b as usize;
                matches!(chain(&self.key, node, &self.masks, b, top - b, count), Ok(v) if v == *end)
            })
    }
}

impl Signature {
    pub fn from_nodes(params: Params, nodes: Vec<BitString>) -> Result<Self> {
        if nodes.len() != params.l() {
            return Err(Error::InvalidParameter(format!(
                "signature needs {} nodes, got {}",
                params.l(),
                nodes.len()
            )));
        }
        if let Some(bad) = nodes.iter().find(|x| x.len() != params.n()) {
            return Err(Error::InvalidLength {
                expected: params.n(),
                actual: bad.len(),
            });
        }
        Ok(Self { params, nodes })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn nodes(&self) -> &[BitString] {
        &self.nodes
    }

    pub fn nodes_mut(&mut self) -> &mut [BitString] {
        &mut self.nodes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_params;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn toy() -> Params {
        derive_params(8, 8, 4).unwrap()
    }

    #[test]
    fn w2_public_key_is_one_step() {
        let p = derive_params(8, 8, 2).unwrap();
        let (sk, pk) = keygen(&p, &mut ChaCha20Rng::seed_from_u64(1));
        for (s, end) in sk.seeds().iter().zip(pk.chain_ends()) {
            assert_eq!(*end, sk.family_key().evaluate(&s.xor(sk.masks().get(1))).unwrap());
        }
    }

    #[test]
    fn keygen_is_deterministic_and_counted() {
        let mut count = EvalCount::new();
        let (sk1, pk1) = keygen_counted(&toy(), &mut ChaCha20Rng::seed_from_u64(5), &mut count);
        assert_eq!(count.get(), 18);
        let (sk2, pk2) = keygen(&toy(), &mut ChaCha20Rng::seed_from_u64(5));
        assert_eq!(sk1, sk2);
        assert_eq!(pk1, pk2);
    }

    #[test]
    fn zero_digits_reveal_seeds() {
        let (mut sk, _) = keygen(&toy(), &mut ChaCha20Rng::seed_from_u64(9));
        let seeds = sk.seeds().to_vec();
        // 0x00 encodes to (0,0,0,0,3,0).
        let sig = sk.sign(&BitString::from_u64(8, 0)).unwrap();
        for i in [0, 1, 2, 3, 5] {
            assert_eq!(sig.nodes()[i], seeds[i]);
        }
        assert_ne!(sig.nodes()[4], seeds[4]);
    }

    #[test]
    fn second_sign_is_refused() {
        let (mut sk, _) = keygen(&toy(), &mut ChaCha20Rng::seed_from_u64(2));
        sk.sign(&BitString::from_u64(8, 1)).unwrap();
        assert!(sk.is_used());
        assert_eq!(sk.sign(&BitString::from_u64(8, 1)), Err(Error::KeyAlreadyUsed));
    }

    #[test]
    fn round_trip_toy_and_counts() {
        let (mut sk, pk) = keygen(&toy(), &mut ChaCha20Rng::seed_from_u64(11));
        let msg = BitString::from_u64(8, 0x1b);
        let mut sc = EvalCount::new();
        let sig = sk.sign_counted(&msg, &mut sc).unwrap();
        // digits (0,1,2,3,1,2)
        assert_eq!(sc.get(), 9);
        let mut vc = EvalCount::new();
        assert!(pk.verify_counted(&sig, &msg, &mut vc));
        assert_eq!(vc.get(), 18 - 9);
        assert!(!pk.verify(&sig, &BitString::from_u64(8, 0x1c)));
    }

    #[test]
    fn malformed_inputs_reject() {
        let (mut sk, pk) = keygen(&toy(), &mut ChaCha20Rng::seed_from_u64(12));
        let msg = BitString::from_u64(8, 0x42);
        let sig = sk.sign(&msg).unwrap();
        assert!(!pk.verify(&sig, &BitString::from_u64(7, 0x42)));
        let other = derive_params(8, 4, 4).unwrap();
        let wrong = Signature {
            params: other,
            nodes: sig.nodes()[..other.l()].to_vec(),
        };
        assert!(!pk.verify(&wrong, &msg));
    }

    #[test]
    fn public_key_recomputation_matches() {
        let (sk, pk) = keygen(&toy(), &mut ChaCha20Rng::seed_from_u64(13));
        assert_eq!(sk.public_key(), pk);
    }
}
