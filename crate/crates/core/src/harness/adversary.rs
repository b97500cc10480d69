//! Forgers that the reduction machines run as subroutines.
//!
//! An adversary sees a public key, may ask for one signature, and then either
//! returns a forgery or gives up. All of its `f_k` evaluations go through an
//! [`Oracle`], which is how the harness measures its running time.

use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::brute::FunctionTable;
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::hash_family::{chain, BitmaskVector, EvalCount, FamilyKey, TOY_MAX_BITS};
use crate::params::{encode, BaseWDigits, Params};
use crate::wots::{PublicKey, Signature};

/// Messages up to this many bits are enumerated exhaustively when searching
/// for forgery targets; longer ones are sampled.
const ENUMERATE_BITS: usize = 12;
const SAMPLED_CANDIDATES: usize = 4096;
/// How many forgery targets the inverting forgers try before giving up.
const MAX_TARGET_TRIES: usize = 64;

/// Counting access to `f_k` for adversaries.
pub struct Oracle<'a> {
    key: &'a FamilyKey,
    count: EvalCount,
}

impl<'a> Oracle<'a> {
    pub fn new(key: &'a FamilyKey) -> Self {
        Self {
            key,
            count: EvalCount::new(),
        }
    }

    pub fn eval(&mut self, x: &BitString) -> Result<BitString> {
        let y = self.key.evaluate(x)?;
        self.count.add(1);
        Ok(y)
    }

    pub fn chain(
        &mut self,
        x: &BitString,
        masks: &BitmaskVector,
        start_level: usize,
        steps: usize,
    ) -> Result<BitString> {
        chain(self.key, x, masks, start_level, steps, &mut self.count)
    }

    /// Evaluates `f_k` on the whole domain; costs `2^n` evaluations.
    pub fn table(&mut self) -> Result<FunctionTable> {
        let t = FunctionTable::build(self.key)?;
        self.count.add(t.domain_size());
        Ok(t)
    }

    pub fn evaluations(&self) -> u64 {
        self.count.get()
    }
}

pub trait Adversary: Send {
    fn name(&self) -> &'static str;

    /// Called once with the public key. Returning a message asks for its
    /// signature; `None` skips the signing query.
    fn choose_query(
        &mut self,
        pk: &PublicKey,
        oracle: &mut Oracle<'_>,
        rng: &mut dyn RngCore,
    ) -> Option<BitString>;

    /// Receives the queried message and its signature, if a query was made
    /// and answered, and returns a candidate forgery or gives up.
    fn forge(
        &mut self,
        pk: &PublicKey,
        answered: Option<(&BitString, &Signature)>,
        oracle: &mut Oracle<'_>,
        rng: &mut dyn RngCore,
    ) -> Option<(BitString, Signature)>;

    /// Idealized leak of the chain that carries the planted challenges. The
    /// machines only call this when an experiment is configured to model an
    /// adversary that has already located the challenge; ordinary runs never
    /// do.
    fn observe_challenge_chain(&mut self, _alpha: usize) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryKind {
    /// Never queries, never forges.
    GiveUp,
    /// Queries a random message and hands back the same pair.
    Replay,
    /// Queries a random message, tabulates `f_k` and forges by walking the
    /// fewest possible chain steps backwards.
    BruteForce,
    /// Queries the all-ones message and forges by walking one chain as far
    /// down as it can through nodes with several preimages, so its chain often
    /// rejoins the honest one above the level it stops at.
    CollisionSeeker,
    /// Only tries forgeries whose digits all dominate the queried ones.
    DigitWalker,
    /// Asks for signatures of messages with as few non-zero digits as it can,
    /// steering towards zero digits on any chain it finds suspicious.
    Nasty,
}

impl AdversaryKind {
    pub const ALL: [AdversaryKind; 6] = [
        AdversaryKind::GiveUp,
        AdversaryKind::Replay,
        AdversaryKind::BruteForce,
        AdversaryKind::CollisionSeeker,
        AdversaryKind::DigitWalker,
        AdversaryKind::Nasty,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AdversaryKind::GiveUp => "give-up",
            AdversaryKind::Replay => "replay",
            AdversaryKind::BruteForce => "brute-force",
            AdversaryKind::CollisionSeeker => "collision-seeker",
            AdversaryKind::DigitWalker => "digit-walker",
            AdversaryKind::Nasty => "nasty",
        }
    }

    /// Does the per-parameter precomputation once so that building one
    /// adversary per trial is cheap.
    pub fn factory(&self, params: &Params) -> AdversaryFactory {
        let low_digit = match self {
            AdversaryKind::Nasty => Some(Arc::new(LowDigitMessages::compute(params))),
            _ => None,
        };
        AdversaryFactory {
            kind: *self,
            params: *params,
            low_digit,
        }
    }
}

impl FromStr for AdversaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown adversary '{s}'")))
    }
}

#[derive(Clone)]
pub struct AdversaryFactory {
    kind: AdversaryKind,
    params: Params,
    low_digit: Option<Arc<LowDigitMessages>>,
}

impl AdversaryFactory {
    pub fn kind(&self) -> AdversaryKind {
        self.kind
    }

    pub fn build(&self) -> Box<dyn Adversary> {
        let p = self.params;
        match self.kind {
            AdversaryKind::GiveUp => Box::new(GiveUp),
            AdversaryKind::Replay => Box::new(Replay { params: p }),
            AdversaryKind::BruteForce => Box::new(InvertingForger::new(p, false)),
            AdversaryKind::CollisionSeeker => Box::new(InvertingForger::new(p, true)),
            AdversaryKind::DigitWalker => Box::new(DigitWalker { params: p }),
            AdversaryKind::Nasty => Box::new(Nasty {
                forger: InvertingForger::new(p, false),
                messages: self.low_digit.clone().expect("precomputed for nasty"),
                leaked: None,
            }),
        }
    }
}

fn random_message(params: &Params, rng: &mut dyn RngCore) -> BitString {
    BitString::random(params.m(), rng)
}

fn all_ones(params: &Params) -> BitString {
    let mut s = BitString::zero(params.m());
    for i in 0..params.m() {
        s.flip_bit(i);
    }
    s
}

/// Every message when `m` is small, otherwise a random sample.
fn candidate_messages(params: &Params, rng: &mut dyn RngCore) -> Vec<BitString> {
    let m = params.m();
    if m <= ENUMERATE_BITS {
        (0..1u64 << m).map(|v| BitString::from_u64(m, v)).collect()
    } else {
        (0..SAMPLED_CANDIDATES).map(|_| random_message(params, rng)).collect()
    }
}

pub struct GiveUp;

impl Adversary for GiveUp {
    fn name(&self) -> &'static str {
        "give-up"
    }

    fn choose_query(&mut self, _: &PublicKey, _: &mut Oracle<'_>, _: &mut dyn RngCore) -> Option<BitString> {
        None
    }

    fn forge(
        &mut self,
        _: &PublicKey,
        _: Option<(&BitString, &Signature)>,
        _: &mut Oracle<'_>,
        _: &mut dyn RngCore,
    ) -> Option<(BitString, Signature)> {
        None
    }
}

pub struct Replay {
    params: Params,
}

impl Adversary for Replay {
    fn name(&self) -> &'static str {
        "replay"
    }

    fn choose_query(&mut self, _: &PublicKey, _: &mut Oracle<'_>, rng: &mut dyn RngCore) -> Option<BitString> {
        Some(random_message(&self.params, rng))
    }

    fn forge(
        &mut self,
        _: &PublicKey,
        answered: Option<(&BitString, &Signature)>,
        _: &mut Oracle<'_>,
        _: &mut dyn RngCore,
    ) -> Option<(BitString, Signature)> {
        answered.map(|(m, s)| (m.clone(), s.clone()))
    }
}

/// Looks for a message whose digits are all at least the queried ones; the
/// checksum guarantees there is none, so this adversary never succeeds.
pub struct DigitWalker {
    params: Params,
}

impl Adversary for DigitWalker {
    fn name(&self) -> &'static str {
        "digit-walker"
    }

    fn choose_query(&mut self, _: &PublicKey, _: &mut Oracle<'_>, rng: &mut dyn RngCore) -> Option<BitString> {
        Some(random_message(&self.params, rng))
    }

    fn forge(
        &mut self,
        pk: &PublicKey,
        answered: Option<(&BitString, &Signature)>,
        oracle: &mut Oracle<'_>,
        rng: &mut dyn RngCore,
    ) -> Option<(BitString, Signature)> {
        let (msg, sig) = answered?;
        let b = encode(msg, &self.params).ok()?;
        let target = candidate_messages(&self.params, rng).into_iter().find(|c| {
            c != msg
                && encode(c, &self.params)
                    .map(|bc| bc.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x >= y))
                    .unwrap_or(false)
        })?;
        let bt = encode(&target, &self.params).ok()?;
        let nodes = sig
            .nodes()
            .iter()
            .zip(b.as_slice().iter().zip(bt.as_slice()))
            .map(|(node, (from, to))| {
                oracle.chain(node, pk.masks(), *from as usize, (*to - *from) as usize)
            })
            .collect::<Result<Vec<_>>>()
            .ok()?;
        Some((target, Signature::from_nodes(self.params, nodes).ok()?))
    }
}

/// Walks down from a level-`level` node to `target` by choosing preimages,
/// backtracking when a branch dies out.
fn descend(
    table: &FunctionTable,
    node: u32,
    level: usize,
    target: usize,
    masks: &BitmaskVector,
    rng: &mut dyn RngCore,
) -> Option<u32> {
    if level == target {
        return Some(node);
    }
    let mut pre = table.preimages(node).to_vec();
    pre.shuffle(rng);
    let mask = masks.get(level).to_u64().expect("toy mask") as u32;
    pre.into_iter()
        .find_map(|x| descend(table, x ^ mask, level - 1, target, masks, rng))
}

/// Deepest walk downwards from `node` at `level`, capped at `level`.
fn max_depth(table: &FunctionTable, node: u32, level: usize, masks: &BitmaskVector) -> usize {
    if level == 0 {
        return 0;
    }
    let mask = masks.get(level).to_u64().expect("toy mask") as u32;
    let mut best = 0;
    for x in table.preimages(node) {
        best = best.max(1 + max_depth(table, x ^ mask, level - 1, masks));
        if best == level {
            break;
        }
    }
    best
}

/// Forges by inverting chain steps against a full table of `f_k`. Only works
/// for toy `n`; above that it gives up.
pub struct InvertingForger {
    params: Params,
    prefer_ambiguous: bool,
    table: Option<FunctionTable>,
}

impl InvertingForger {
    fn new(params: Params, prefer_ambiguous: bool) -> Self {
        Self {
            params,
            prefer_ambiguous,
            table: None,
        }
    }

    fn table(&mut self, oracle: &mut Oracle<'_>) -> Option<&FunctionTable> {
        if self.table.is_none() {
            if self.params.n() > TOY_MAX_BITS {
                return None;
            }
            self.table = Some(oracle.table().ok()?);
        }
        self.table.as_ref()
    }

    fn attempt(
        &mut self,
        pk: &PublicKey,
        msg: &BitString,
        sig: &Signature,
        oracle: &mut Oracle<'_>,
        rng: &mut dyn RngCore,
    ) -> Option<(BitString, Signature)> {
        let params = self.params;
        let prefer_ambiguous = self.prefer_ambiguous;
        let b = encode(msg, &params).ok()?;
        self.table(oracle)?;
        let table = self.table.as_ref().expect("just built");
        let node_value = |i: usize| sig.nodes()[i].to_u64().expect("toy node") as u32;

        // Brute force ranks targets by backward steps only. The collision
        // seeker first maximizes the deepest drop on a chain whose revealed
        // node has several preimages, so its walk can leave the signer's chain.
        let mut ranked: Vec<((u64, u64), BitString, BaseWDigits)> = candidate_messages(&params, rng)
            .into_iter()
            .filter(|c| c != msg)
            .filter_map(|c| {
                let bc = encode(&c, &params).ok()?;
                let mut cost = 0u64;
                let mut deepest = 0u64;
                for (i, (to, from)) in bc.as_slice().iter().zip(b.as_slice()).enumerate() {
                    if to < from {
                        let drop = (from - to) as u64;
                        cost += drop;
                        if table.preimages(node_value(i)).len() > 1 {
                            deepest = deepest.max(drop);
                        }
                    }
                }
                let key = if prefer_ambiguous {
                    (u64::MAX - deepest, cost)
                } else {
                    (cost, 0)
                };
                Some((key, c, bc))
            })
            .collect();
        ranked.shuffle(rng);
        ranked.sort_by_key(|(key, _, _)| *key);

        for (_, target, bt) in ranked.into_iter().take(MAX_TARGET_TRIES) {
            let mut nodes = Vec::with_capacity(params.l());
            for (i, (to, from)) in bt.as_slice().iter().zip(b.as_slice()).enumerate() {
                let (to, from) = (*to as usize, *from as usize);
                let node = if to >= from {
                    oracle.chain(&sig.nodes()[i], pk.masks(), from, to - from).ok()
                } else {
                    descend(table, node_value(i), from, to, pk.masks(), rng)
                        .map(|v| BitString::from_u64(params.n(), v as u64))
                };
                match node {
                    Some(x) => nodes.push(x),
                    None => break,
                }
            }
            if nodes.len() == params.l() {
                return Some((target, Signature::from_nodes(params, nodes).ok()?));
            }
        }
        None
    }
}

impl Adversary for InvertingForger {
    fn name(&self) -> &'static str {
        if self.prefer_ambiguous {
            "collision-seeker"
        } else {
            "brute-force"
        }
    }

    /// The collision seeker asks for the all-ones message, whose message
    /// digits are all `w - 1`, leaving long chains to walk back down.
    fn choose_query(&mut self, _: &PublicKey, _: &mut Oracle<'_>, rng: &mut dyn RngCore) -> Option<BitString> {
        if self.prefer_ambiguous {
            Some(all_ones(&self.params))
        } else {
            Some(random_message(&self.params, rng))
        }
    }

    fn forge(
        &mut self,
        pk: &PublicKey,
        answered: Option<(&BitString, &Signature)>,
        oracle: &mut Oracle<'_>,
        rng: &mut dyn RngCore,
    ) -> Option<(BitString, Signature)> {
        let (msg, sig) = answered?;
        self.attempt(pk, msg, sig, oracle, rng)
    }
}

/// Query choices for the nasty adversary, fixed per parameter set.
struct LowDigitMessages {
    /// Fewest non-zero digits; ties go to larger non-zero digits.
    overall: BitString,
    /// For chain `i` (index `i - 1`), a message minimizing digit `i`.
    per_chain: Vec<BitString>,
}

impl LowDigitMessages {
    fn compute(params: &Params) -> Self {
        // Sampling for large m uses a fixed stream so the choice is stable.
        let mut rng = <rand_chacha::ChaCha20Rng as rand::SeedableRng>::seed_from_u64(0x6e_6173_7479);
        let mut cands = vec![BitString::zero(params.m()), all_ones(params)];
        cands.extend(candidate_messages(params, &mut rng));
        let encoded: Vec<(BitString, BaseWDigits)> = cands
            .into_iter()
            .map(|c| {
                let b = encode(&c, params).expect("candidate has m bits");
                (c, b)
            })
            .collect();
        let w = params.w();
        let overall_score = |b: &BaseWDigits| {
            let penalty: u32 = b.as_slice().iter().filter(|d| **d > 0).map(|d| w - 1 - d).sum();
            (b.nonzero_count(), penalty)
        };
        let overall = encoded
            .iter()
            .min_by_key(|(_, b)| overall_score(b))
            .map(|(c, _)| c.clone())
            .expect("non-empty");
        let per_chain = (1..=params.l())
            .map(|i| {
                encoded
                    .iter()
                    .min_by_key(|(_, b)| (b.chain_digit(i), overall_score(b)))
                    .map(|(c, _)| c.clone())
                    .expect("non-empty")
            })
            .collect();
        Self { overall, per_chain }
    }
}

/// Queries low-digit messages. On toy parameters it also tabulates `f_k` and
/// probes each public chain end for a full-depth preimage path; a chain end
/// without one cannot be honest, so the query then zeroes that chain's digit.
pub struct Nasty {
    forger: InvertingForger,
    messages: Arc<LowDigitMessages>,
    leaked: Option<usize>,
}

impl Adversary for Nasty {
    fn name(&self) -> &'static str {
        "nasty"
    }

    fn choose_query(
        &mut self,
        pk: &PublicKey,
        oracle: &mut Oracle<'_>,
        _: &mut dyn RngCore,
    ) -> Option<BitString> {
        if let Some(alpha) = self.leaked {
            return Some(self.messages.per_chain[alpha - 1].clone());
        }
        let top = self.forger.params.chain_len();
        if let Some(table) = self.forger.table(oracle) {
            for (i, end) in pk.chain_ends().iter().enumerate() {
                let v = end.to_u64().expect("toy node") as u32;
                if max_depth(table, v, top, pk.masks()) < top {
                    return Some(self.messages.per_chain[i].clone());
                }
            }
        }
        Some(self.messages.overall.clone())
    }

    fn forge(
        &mut self,
        pk: &PublicKey,
        answered: Option<(&BitString, &Signature)>,
        oracle: &mut Oracle<'_>,
        rng: &mut dyn RngCore,
    ) -> Option<(BitString, Signature)> {
        self.forger.forge(pk, answered, oracle, rng)
    }

    fn observe_challenge_chain(&mut self, alpha: usize) {
        self.leaked = Some(alpha);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_params;
    use crate::wots::keygen;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn toy() -> Params {
        derive_params(8, 8, 4).unwrap()
    }

    #[test]
    fn names_round_trip() {
        for k in AdversaryKind::ALL {
            assert_eq!(k.name().parse::<AdversaryKind>().unwrap(), k);
            assert_eq!(k.factory(&toy()).build().name(), k.name());
        }
        assert!("nobody".parse::<AdversaryKind>().is_err());
    }

    #[test]
    fn low_digit_messages_toy() {
        let p = toy();
        let lm = LowDigitMessages::compute(&p);
        // 0x00 -> (0,0,0,0,3,0) is the unique message with a single non-zero digit.
        assert_eq!(lm.overall, BitString::from_u64(8, 0));
        for i in 1..=p.l() {
            assert_eq!(encode(&lm.per_chain[i - 1], &p).unwrap().chain_digit(i), 0);
        }
    }

    #[test]
    fn inverting_forger_forges_on_fair_keys() {
        let p = toy();
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        let factory = AdversaryKind::BruteForce.factory(&p);
        let mut valid = 0;
        for _ in 0..50 {
            let (mut sk, pk) = keygen(&p, &mut rng);
            let mut adv = factory.build();
            let mut oracle = Oracle::new(pk.family_key());
            let q = adv.choose_query(&pk, &mut oracle, &mut rng).unwrap();
            let sig = sk.sign(&q).unwrap();
            if let Some((m2, s2)) = adv.forge(&pk, Some((&q, &sig)), &mut oracle, &mut rng) {
                assert_ne!(m2, q);
                assert!(pk.verify(&s2, &m2));
                valid += 1;
            }
            assert!(oracle.evaluations() >= 256);
        }
        assert_eq!(valid, 50);
    }

    #[test]
    fn honest_chain_ends_have_full_depth() {
        let p = toy();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..20 {
            let (_, pk) = keygen(&p, &mut rng);
            let t = FunctionTable::build(pk.family_key()).unwrap();
            for end in pk.chain_ends() {
                let v = end.to_u64().unwrap() as u32;
                assert_eq!(max_depth(&t, v, 3, pk.masks()), 3);
            }
        }
    }
}
