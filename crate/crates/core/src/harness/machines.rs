//! The oracle machines that turn a forger into a preimage finder, a second
//! preimage finder or an undetectability distinguisher.
//!
//! Chain indices (`alpha`) and levels (`beta`, `gamma`) are 1-based, as in
//! the rest of the crate: level `j` is the node produced with mask `r_j`.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::adversary::{Adversary, Oracle};
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::hash_family::{chain, chain_nodes, BitmaskVector, EvalCount, FamilyKey};
use crate::params::{encode, BaseWDigits, Params};
use crate::wots::{PublicKey, SecretKey, Signature};

/// Where the one-wayness and second-preimage challenges sit in the key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChallengeSpec {
    pub alpha: usize,
    pub beta: usize,
    /// Absent exactly when `beta = w - 1`.
    pub gamma: Option<usize>,
    pub y_c: BitString,
    pub x_c: BitString,
}

/// A key pair with the challenges planted in chain `alpha`.
#[derive(Debug, Clone)]
pub struct PlantedKey {
    pub spec: ChallengeSpec,
    /// `r` before `r_gamma` was replaced.
    pub original_masks: BitmaskVector,
    /// Uses the modified masks `r'`. Its seed for chain `alpha` is unused.
    pub secret: SecretKey,
    pub public: PublicKey,
    /// Nodes of chain `alpha` from level `beta` (`y_c`) to `w - 1`.
    pub planted_chain: Vec<BitString>,
}

impl PlantedKey {
    pub fn masks(&self) -> &BitmaskVector {
        self.secret.masks()
    }

    /// Node of the planted chain at `level >= beta`.
    pub fn planted_node(&self, level: usize) -> &BitString {
        &self.planted_chain[level - self.spec.beta]
    }
}

/// Samples `alpha`, `beta`, `gamma`, fresh masks and seeds, then plants.
pub fn plant_challenges<R: RngCore + ?Sized>(
    params: &Params,
    key: &FamilyKey,
    y_c: &BitString,
    x_c: &BitString,
    rng: &mut R,
    count: &mut EvalCount,
) -> Result<PlantedKey> {
    let w1 = params.chain_len();
    let alpha = rng.gen_range(1..=params.l());
    let beta = rng.gen_range(1..=w1);
    let gamma = (beta < w1).then(|| rng.gen_range(beta + 1..=w1));
    let masks = BitmaskVector::sample(params.n(), params.w(), rng);
    let seeds = (0..params.l()).map(|_| BitString::random(params.n(), rng)).collect();
    plant_challenges_at(params, key, y_c, x_c, alpha, beta, gamma, masks, seeds, count)
}

/// Plants at fixed positions. `pk'_alpha = c^{w-1-beta}(y_c, r'_{beta+1..})`
/// with `r'_gamma = c^{gamma-beta-1}(y_c, r_{beta+1..}) XOR x_c`, so that the
/// level-`gamma` node of the planted chain is `f_k(x_c)`. Other chains are
/// honest under `r'`.
#[allow(clippy::too_many_arguments)]
pub fn plant_challenges_at(
    params: &Params,
    key: &FamilyKey,
    y_c: &BitString,
    x_c: &BitString,
    alpha: usize,
    beta: usize,
    gamma: Option<usize>,
    masks: BitmaskVector,
    seeds: Vec<BitString>,
    count: &mut EvalCount,
) -> Result<PlantedKey> {
    let w1 = params.chain_len();
    if !(1..=params.l()).contains(&alpha) {
        return Err(Error::IndexRange(format!("alpha = {alpha} outside 1..={}", params.l())));
    }
    if !(1..=w1).contains(&beta) {
        return Err(Error::IndexRange(format!("beta = {beta} outside 1..={w1}")));
    }
    match gamma {
        None if beta < w1 => {
            return Err(Error::IndexRange(format!("gamma required when beta = {beta} < {w1}")))
        }
        Some(g) if g <= beta || g > w1 => {
            return Err(Error::IndexRange(format!("gamma = {g} outside {}..={w1}", beta + 1)))
        }
        _ => {}
    }
    if masks.len() != w1 || seeds.len() != params.l() {
        return Err(Error::InvalidParameter("masks or seeds do not match params".into()));
    }
    for x in [y_c, x_c] {
        key.check_len(x)?;
    }

    let mut planted_masks = masks.clone();
    let planted_chain = match gamma {
        None => vec![y_c.clone()],
        Some(g) => {
            let mut nodes = chain_nodes(key, y_c, &masks, beta, g - 1 - beta, count)?;
            let below = nodes.pop().expect("chain_nodes is non-empty");
            planted_masks.replace(g, below.xor(x_c));
            let upper = chain_nodes(key, &below, &planted_masks, g - 1, w1 + 1 - g, count)?;
            nodes.extend(upper);
            nodes
        }
    };

    let ends = seeds
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if i + 1 == alpha {
                Ok(planted_chain[planted_chain.len() - 1].clone())
            } else {
                chain(key, s, &planted_masks, 0, w1, count)
            }
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(PlantedKey {
        spec: ChallengeSpec {
            alpha,
            beta,
            gamma,
            y_c: y_c.clone(),
            x_c: x_c.clone(),
        },
        original_masks: masks,
        public: PublicKey::from_parts(*params, key.clone(), planted_masks.clone(), ends),
        secret: SecretKey::from_parts(*params, key.clone(), planted_masks, seeds, false),
        planted_chain,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryAnswer {
    Signed(Signature, BaseWDigits),
    /// `b_alpha < beta`: the planted chain cannot be opened at that level.
    BadQuery { b_alpha: u32 },
}

/// Signs with chain `alpha` taken from the planted chain:
/// `sigma_alpha = c^{b_alpha-beta}(y_c, r'_{beta+1..})`.
pub fn answer_query(planted: &PlantedKey, message: &BitString, count: &mut EvalCount) -> Result<QueryAnswer> {
    let spec = &planted.spec;
    answer_with_chain(
        &planted.secret,
        spec.alpha,
        spec.beta,
        &spec.y_c,
        message,
        count,
    )
}

fn answer_with_chain(
    secret: &SecretKey,
    alpha: usize,
    beta: usize,
    top_value: &BitString,
    message: &BitString,
    count: &mut EvalCount,
) -> Result<QueryAnswer> {
    let params = *secret.params();
    let digits = encode(message, &params)?;
    let b_alpha = digits.chain_digit(alpha);
    if (b_alpha as usize) < beta {
        return Ok(QueryAnswer::BadQuery { b_alpha });
    }
    let (key, masks) = (secret.family_key(), secret.masks());
    let nodes = secret
        .seeds()
        .iter()
        .zip(digits.as_slice())
        .enumerate()
        .map(|(i, (s, b))| {
            if i + 1 == alpha {
                chain(key, top_value, masks, beta, *b as usize - beta, count)
            } else {
                chain(key, s, masks, 0, *b as usize, count)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QueryAnswer::Signed(Signature::from_nodes(params, nodes)?, digits))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailReason {
    /// `b_alpha < beta` at query time.
    BadQuery,
    /// No forgery, an invalid one, or the queried message again.
    NoForgery,
    /// `b'_alpha >= beta`.
    WrongPosition,
    /// The forged chain rejoined the planted one somewhere other than `gamma`.
    CollisionElsewhere,
}

impl FailReason {
    pub const ALL: [FailReason; 4] = [
        FailReason::BadQuery,
        FailReason::NoForgery,
        FailReason::WrongPosition,
        FailReason::CollisionElsewhere,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FailReason::BadQuery => "bad-query",
            FailReason::NoForgery => "no-forgery",
            FailReason::WrongPosition => "wrong-position",
            FailReason::CollisionElsewhere => "collision-elsewhere",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeKind {
    /// `f_k(x) = y_c`.
    Preimage(BitString),
    /// `x' != x_c` and `f_k(x') = f_k(x_c)`.
    SecondPreimage(BitString),
    Fail(FailReason),
}

impl OutcomeKind {
    pub fn is_success(&self) -> bool {
        !matches!(self, OutcomeKind::Fail(_))
    }
}

/// Turns a valid forgery into a challenge solution. The caller must have
/// checked that the forgery verifies under the planted public key and that
/// `M'` differs from the queried message; a claimed solution that does not
/// re-verify under `f_k` is reported as [`Error::InternalInconsistency`].
pub fn extract(
    spec: &ChallengeSpec,
    masks: &BitmaskVector,
    key: &FamilyKey,
    message: &BitString,
    sig: &Signature,
    count: &mut EvalCount,
) -> Result<OutcomeKind> {
    let params = *sig.params();
    let w1 = params.chain_len();
    let b = encode(message, &params)?.chain_digit(spec.alpha) as usize;
    let beta = spec.beta;
    if b >= beta {
        return Ok(OutcomeKind::Fail(FailReason::WrongPosition));
    }
    let sigma = &sig.nodes()[spec.alpha - 1];
    // walk[j] is the forged chain's node at level b + j.
    let mut walk = chain_nodes(key, sigma, masks, b, beta - b, count)?;
    if beta == w1 || walk[beta - b] == spec.y_c {
        let x = walk[beta - b - 1].xor(masks.get(beta));
        let image = key.evaluate(&x)?;
        count.add(1);
        if image != spec.y_c {
            return Err(Error::InternalInconsistency(format!(
                "claimed preimage {x} maps to {image}, not {}",
                spec.y_c
            )));
        }
        return Ok(OutcomeKind::Preimage(x));
    }
    let gamma = spec.gamma.expect("gamma present when beta < w - 1");
    let at_beta = walk.pop().expect("non-empty");
    walk.extend(chain_nodes(key, &at_beta, masks, beta, gamma - beta, count)?);
    let x2 = walk[gamma - 1 - b].xor(masks.get(gamma));
    let target = key.evaluate(&spec.x_c)?;
    count.add(1);
    if x2 == spec.x_c || walk[gamma - b] != target {
        return Ok(OutcomeKind::Fail(FailReason::CollisionElsewhere));
    }
    let image = key.evaluate(&x2)?;
    count.add(1);
    if image != target {
        return Err(Error::InternalInconsistency(format!(
            "claimed second preimage {x2} maps to {image}, not {target}"
        )));
    }
    Ok(OutcomeKind::SecondPreimage(x2))
}

/// What happened during one run of a machine, for flag consistency checks.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialTrace {
    pub alpha: usize,
    pub beta: usize,
    pub gamma: Option<usize>,
    pub queried: bool,
    /// Digit of the queried message on chain `alpha`.
    pub b_alpha: Option<u32>,
    /// The forgery verifies and differs from the queried message.
    pub forgery_valid: bool,
    pub b_prime_alpha: Option<u32>,
    /// Query (if any) at or above `beta`, valid forgery, and
    /// `b'_alpha < b_alpha` (`beta` stands in for `b_alpha` when no query
    /// was made).
    pub fortunate: bool,
    /// Query (if any) at or above `beta`, valid forgery, and `b'_alpha < beta`;
    /// this is the gate in front of the extraction branches.
    pub fortunate_below_beta: bool,
    /// First level above `beta` where the forged chain meets the planted one,
    /// when the forgery did not pass through `y_c`. Diagnostic only; its
    /// evaluations are not charged.
    pub collision_level: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionOutcome {
    pub kind: OutcomeKind,
    pub evaluations_used: u64,
    pub adversary_evaluations: u64,
    pub machine_evaluations: u64,
    pub trace: TrialTrace,
}

impl ReductionOutcome {
    /// `evaluations_used <= adversary + 3lw + w - 2`.
    pub fn within_budget(&self, params: &Params) -> bool {
        self.evaluations_used <= self.adversary_evaluations + params.reduction_overhead()
    }
}

struct Interaction {
    queried: Option<BitString>,
    b_alpha: Option<u32>,
    forgery: Option<(BitString, Signature)>,
    forgery_valid: bool,
    b_prime_alpha: Option<u32>,
    bad_query: bool,
}

/// Shows `pk` to the adversary, answers its query with `answer`, and checks
/// the forgery it returns.
fn interact(
    adversary: &mut dyn Adversary,
    pk: &PublicKey,
    alpha: usize,
    mut answer: impl FnMut(&BitString, &mut EvalCount) -> Result<QueryAnswer>,
    oracle: &mut Oracle<'_>,
    rng: &mut dyn RngCore,
    count: &mut EvalCount,
) -> Result<Interaction> {
    let params = *pk.params();
    let mut out = Interaction {
        queried: None,
        b_alpha: None,
        forgery: None,
        forgery_valid: false,
        b_prime_alpha: None,
        bad_query: false,
    };
    let query = adversary.choose_query(pk, oracle, rng);
    let signed = match &query {
        Some(m) => match answer(m, count)? {
            QueryAnswer::Signed(sig, digits) => {
                out.b_alpha = Some(digits.chain_digit(alpha));
                Some((m.clone(), sig))
            }
            QueryAnswer::BadQuery { b_alpha } => {
                out.b_alpha = Some(b_alpha);
                out.bad_query = true;
                out.queried = query;
                return Ok(out);
            }
        },
        None => None,
    };
    out.queried = query;
    let forgery = adversary.forge(pk, signed.as_ref().map(|(m, s)| (m, s)), oracle, rng);
    if let Some((m2, s2)) = forgery {
        let fresh = out.queried.as_ref() != Some(&m2);
        if fresh && s2.params() == &params && pk.verify_counted(&s2, &m2, count) {
            out.b_prime_alpha = Some(encode(&m2, &params)?.chain_digit(alpha));
            out.forgery_valid = true;
        }
        out.forgery = Some((m2, s2));
    }
    Ok(out)
}

fn trace_of(spec_alpha: usize, beta: usize, gamma: Option<usize>, it: &Interaction) -> TrialTrace {
    let query_ok = !it.bad_query;
    let b_prime = it.b_prime_alpha.map(|b| b as usize);
    let reference = it.b_alpha.map(|b| b as usize).unwrap_or(beta);
    TrialTrace {
        alpha: spec_alpha,
        beta,
        gamma,
        queried: it.queried.is_some(),
        b_alpha: it.b_alpha,
        forgery_valid: it.forgery_valid,
        b_prime_alpha: it.b_prime_alpha,
        fortunate: query_ok && it.forgery_valid && b_prime.is_some_and(|b| b < reference),
        fortunate_below_beta: query_ok && it.forgery_valid && b_prime.is_some_and(|b| b < beta),
        collision_level: None,
    }
}

/// Runs the reduction against `adversary`: plants `y_c` and `x_c`, answers
/// the signing query and extracts from the forgery.
///
/// With `leak_challenge_chain` the adversary is told `alpha` before it sees
/// the key; this models an adversary that can already locate the challenge.
pub fn run_reduction(
    adversary: &mut dyn Adversary,
    params: &Params,
    key: &FamilyKey,
    y_c: &BitString,
    x_c: &BitString,
    rng: &mut dyn RngCore,
    leak_challenge_chain: bool,
) -> Result<ReductionOutcome> {
    let mut count = EvalCount::new();
    let planted = plant_challenges(params, key, y_c, x_c, rng, &mut count)?;
    let spec = planted.spec.clone();
    if leak_challenge_chain {
        adversary.observe_challenge_chain(spec.alpha);
    }
    let mut oracle = Oracle::new(key);
    let it = interact(
        adversary,
        &planted.public,
        spec.alpha,
        |m, c| answer_query(&planted, m, c),
        &mut oracle,
        rng,
        &mut count,
    )?;
    let mut trace = trace_of(spec.alpha, spec.beta, spec.gamma, &it);

    let kind = if it.bad_query {
        OutcomeKind::Fail(FailReason::BadQuery)
    } else if !it.forgery_valid {
        OutcomeKind::Fail(FailReason::NoForgery)
    } else {
        let (m2, s2) = it.forgery.as_ref().expect("valid forgery present");
        let kind = extract(&spec, planted.masks(), key, m2, s2, &mut count)?;
        if matches!(kind, OutcomeKind::SecondPreimage(_) | OutcomeKind::Fail(FailReason::CollisionElsewhere)) {
            trace.collision_level = collision_level(&planted, s2, trace.b_prime_alpha.unwrap() as usize)?;
        }
        kind
    };

    let adversary_evaluations = oracle.evaluations();
    Ok(ReductionOutcome {
        kind,
        evaluations_used: adversary_evaluations + count.get(),
        adversary_evaluations,
        machine_evaluations: count.get(),
        trace,
    })
}

fn collision_level(planted: &PlantedKey, sig: &Signature, b: usize) -> Result<Option<usize>> {
    let spec = &planted.spec;
    let w1 = sig.params().chain_len();
    let mut scratch = EvalCount::new();
    let walk = chain_nodes(
        planted.public.family_key(),
        &sig.nodes()[spec.alpha - 1],
        planted.masks(),
        b,
        w1 - b,
        &mut scratch,
    )?;
    Ok((spec.beta + 1..=w1).find(|j| walk[j - b] == *planted.planted_node(*j)))
}

/// How the value handed to the distinguisher is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainSampling {
    /// `u` uniform.
    Uniform,
    /// `u = c^beta(x, r)` for uniform `x`, as in key generation.
    KeyGen,
}

/// An input `(beta, u, r, k)` for [`run_distinguisher`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UdChainSample {
    pub beta: usize,
    pub u: BitString,
    pub masks: BitmaskVector,
    pub key: FamilyKey,
}

impl UdChainSample {
    pub fn sample<R: RngCore + rand::CryptoRng>(
        params: &Params,
        sampling: ChainSampling,
        rng: &mut R,
    ) -> Self {
        let beta = rng.gen_range(1..=params.chain_len());
        let key = FamilyKey::sample(params.family(), rng);
        let masks = BitmaskVector::sample(params.n(), params.w(), rng);
        let x = BitString::random(params.n(), rng);
        let u = match sampling {
            ChainSampling::Uniform => x,
            ChainSampling::KeyGen => {
                chain(&key, &x, &masks, 0, beta, &mut EvalCount::new()).expect("beta < w")
            }
        };
        Self { beta, u, masks, key }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistinguisherOutcome {
    pub output: bool,
    pub evaluations_used: u64,
    pub adversary_evaluations: u64,
    pub machine_evaluations: u64,
    pub trace: TrialTrace,
}

impl DistinguisherOutcome {
    pub fn within_budget(&self, params: &Params) -> bool {
        self.evaluations_used <= self.adversary_evaluations + params.reduction_overhead()
    }
}

/// Builds a key whose chain `alpha` passes through `u` at level `beta` and
/// outputs 1 iff the adversary's forgery is fortunate: query (if any) at or
/// above `beta`, valid forgery, `b'_alpha < beta`.
pub fn run_distinguisher(
    adversary: &mut dyn Adversary,
    params: &Params,
    sample: &UdChainSample,
    rng: &mut dyn RngCore,
    leak_challenge_chain: bool,
) -> Result<DistinguisherOutcome> {
    let w1 = params.chain_len();
    let beta = sample.beta;
    if !(1..=w1).contains(&beta) {
        return Err(Error::IndexRange(format!("beta = {beta} outside 1..={w1}")));
    }
    if sample.masks.len() != w1 || sample.key.spec() != params.family() {
        return Err(Error::InvalidParameter("sample does not match params".into()));
    }
    let key = &sample.key;
    let mut count = EvalCount::new();
    let alpha = rng.gen_range(1..=params.l());
    let seeds: Vec<BitString> = (0..params.l()).map(|_| BitString::random(params.n(), rng)).collect();
    let ends = seeds
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if i + 1 == alpha {
                chain(key, &sample.u, &sample.masks, beta, w1 - beta, &mut count)
            } else {
                chain(key, s, &sample.masks, 0, w1, &mut count)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let public = PublicKey::from_parts(*params, key.clone(), sample.masks.clone(), ends);
    let secret = SecretKey::from_parts(*params, key.clone(), sample.masks.clone(), seeds, false);
    if leak_challenge_chain {
        adversary.observe_challenge_chain(alpha);
    }
    let mut oracle = Oracle::new(key);
    let it = interact(
        adversary,
        &public,
        alpha,
        |m, c| answer_with_chain(&secret, alpha, beta, &sample.u, m, c),
        &mut oracle,
        rng,
        &mut count,
    )?;
    let trace = trace_of(alpha, beta, None, &it);
    let adversary_evaluations = oracle.evaluations();
    Ok(DistinguisherOutcome {
        output: trace.fortunate_below_beta,
        evaluations_used: adversary_evaluations + count.get(),
        adversary_evaluations,
        machine_evaluations: count.get(),
        trace,
    })
}

/// How the undetectability challenge `u` is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UdSampling {
    /// `u` uniform.
    Uniform,
    /// `u = f_k(x)` for uniform `x`.
    Family,
}

/// An undetectability challenge `(u, k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UdSample {
    pub u: BitString,
    pub key: FamilyKey,
}

impl UdSample {
    pub fn sample<R: RngCore + rand::CryptoRng>(params: &Params, sampling: UdSampling, rng: &mut R) -> Self {
        let key = FamilyKey::sample(params.family(), rng);
        let x = BitString::random(params.n(), rng);
        let u = match sampling {
            UdSampling::Uniform => x,
            UdSampling::Family => key.evaluate(&x).expect("n-bit input"),
        };
        Self { u, key }
    }
}

/// Treats `u` as the level-`(i_star + 1)` node of a chain, walks it up to
/// level `beta_star` under fresh masks, and runs the distinguisher on the
/// result. With `u = f_k(x)` the embedded chain starts uniform at level
/// `i_star`; with `u` uniform it starts uniform at level `i_star + 1`.
pub fn run_hybrid_breaker(
    adversary: &mut dyn Adversary,
    params: &Params,
    sample: &UdSample,
    beta_star: usize,
    i_star: usize,
    rng: &mut dyn RngCore,
) -> Result<DistinguisherOutcome> {
    let w1 = params.chain_len();
    if !(i_star < beta_star && beta_star <= w1) {
        return Err(Error::IndexRange(format!(
            "need 0 <= i_star < beta_star <= {w1}, got i_star = {i_star}, beta_star = {beta_star}"
        )));
    }
    let masks = BitmaskVector::sample(params.n(), params.w(), rng);
    let mut embed = EvalCount::new();
    let u = chain(&sample.key, &sample.u, &masks, i_star + 1, beta_star - i_star - 1, &mut embed)?;
    let chain_sample = UdChainSample {
        beta: beta_star,
        u,
        masks,
        key: sample.key.clone(),
    };
    let mut out = run_distinguisher(adversary, params, &chain_sample, rng, false)?;
    out.machine_evaluations += embed.get();
    out.evaluations_used += embed.get();
    Ok(out)
}
