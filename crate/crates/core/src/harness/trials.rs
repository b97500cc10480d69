//! Repeated trials of the machines with merged counts and interval estimates.
//!
//! Trial `i` draws all of its randomness from a ChaCha20 stream keyed by the
//! master seed and the experiment, at stream position `i`, so results do not
//! depend on scheduling and trials run in parallel.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adversary::{AdversaryFactory, AdversaryKind, Oracle};
use super::machines::{
    run_distinguisher, run_hybrid_breaker, run_reduction, ChainSampling, FailReason, OutcomeKind, ReductionOutcome,
    UdChainSample, UdSample, UdSampling,
};
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::hash_family::{FamilyKey, TOY_MAX_BITS};
use crate::params::{encode, Params};
use crate::wots::keygen;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959963984540054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    /// The plain one-query forgery game; measures the adversary's success.
    EuCma,
    Reduction,
    Distinguisher { sampling: ChainSampling },
    HybridBreaker {
        beta_star: usize,
        i_star: usize,
        sampling: UdSampling,
    },
}

impl Experiment {
    pub fn name(&self) -> String {
        match self {
            Experiment::EuCma => "eu-cma".into(),
            Experiment::Reduction => "reduction".into(),
            Experiment::Distinguisher { sampling } => match sampling {
                ChainSampling::Uniform => "distinguisher-uniform".into(),
                ChainSampling::KeyGen => "distinguisher-keygen".into(),
            },
            Experiment::HybridBreaker {
                beta_star,
                i_star,
                sampling,
            } => {
                let s = match sampling {
                    UdSampling::Uniform => "uniform",
                    UdSampling::Family => "family",
                };
                format!("hybrid-{beta_star}-{i_star}-{s}")
            }
        }
    }

    fn stream_tag(&self) -> u64 {
        match self {
            Experiment::EuCma => 1,
            Experiment::Reduction => 2,
            Experiment::Distinguisher { sampling } => 3 + *sampling as u64,
            Experiment::HybridBreaker {
                beta_star,
                i_star,
                sampling,
            } => 0x100 | (*beta_star as u64) << 32 | (*i_star as u64) << 8 | *sampling as u64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub params: Params,
    pub adversary: AdversaryKind,
    pub experiment: Experiment,
    pub trials: u64,
    pub seed: u64,
    /// Tell the adversary which chain carries the challenge.
    #[serde(default)]
    pub leak_challenge_chain: bool,
}

impl TrialConfig {
    pub fn new(params: Params, adversary: AdversaryKind, experiment: Experiment, trials: u64, seed: u64) -> Self {
        Self {
            params,
            adversary,
            experiment,
            trials,
            seed,
            leak_challenge_chain: false,
        }
    }

    fn trial_rng(&self, index: u64) -> ChaCha20Rng {
        let mut seed = [0u8; 32];
        seed[..8].copy_from_slice(&self.seed.to_le_bytes());
        seed[8..16].copy_from_slice(&self.experiment.stream_tag().to_le_bytes());
        let mut rng = ChaCha20Rng::from_seed(seed);
        rng.set_stream(index);
        rng
    }
}

/// Collisions observed for one planted level `beta`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionCell {
    pub beta: usize,
    /// Valid forgeries below `beta` whose chain rejoined the planted chain
    /// above `beta`.
    pub collisions: u64,
    /// Of those, how many rejoined exactly at `gamma`.
    pub at_gamma: u64,
}

/// Counts from a batch of trials. Every field is a sum or a maximum, so
/// batches merge in any order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialStats {
    pub trials: u64,
    pub queries: u64,
    pub valid_forgeries: u64,
    pub fortunate: u64,
    pub fortunate_below_beta: u64,
    pub preimages: u64,
    pub second_preimages: u64,
    pub fail_bad_query: u64,
    pub fail_no_forgery: u64,
    pub fail_wrong_position: u64,
    pub fail_collision_elsewhere: u64,
    /// Queries whose digit on the challenge chain equals `beta`.
    pub b_alpha_eq_beta: u64,
    /// Distinguisher runs that output 1.
    pub outputs_one: u64,
    pub budget_violations: u64,
    /// Claimed solutions that failed re-verification.
    pub internal_inconsistencies: u64,
    /// Trials whose outcome disagrees with their fortunate flags.
    pub flag_violations: u64,
    pub adversary_evaluations: u64,
    pub machine_evaluations: u64,
    pub max_machine_evaluations: u64,
    /// Indexed by `beta - 1`; empty for experiments without a planted chain.
    pub collision_cells: Vec<CollisionCell>,
}

impl TrialStats {
    pub fn merge(mut self, other: TrialStats) -> TrialStats {
        self.trials += other.trials;
        self.queries += other.queries;
        self.valid_forgeries += other.valid_forgeries;
        self.fortunate += other.fortunate;
        self.fortunate_below_beta += other.fortunate_below_beta;
        self.preimages += other.preimages;
        self.second_preimages += other.second_preimages;
        self.fail_bad_query += other.fail_bad_query;
        self.fail_no_forgery += other.fail_no_forgery;
        self.fail_wrong_position += other.fail_wrong_position;
        self.fail_collision_elsewhere += other.fail_collision_elsewhere;
        self.b_alpha_eq_beta += other.b_alpha_eq_beta;
        self.outputs_one += other.outputs_one;
        self.budget_violations += other.budget_violations;
        self.internal_inconsistencies += other.internal_inconsistencies;
        self.flag_violations += other.flag_violations;
        self.adversary_evaluations += other.adversary_evaluations;
        self.machine_evaluations += other.machine_evaluations;
        self.max_machine_evaluations = self.max_machine_evaluations.max(other.max_machine_evaluations);
        if self.collision_cells.len() < other.collision_cells.len() {
            let start = self.collision_cells.len();
            self.collision_cells
                .extend(other.collision_cells[start..].iter().map(|c| CollisionCell {
                    beta: c.beta,
                    ..Default::default()
                }));
        }
        for (a, b) in self.collision_cells.iter_mut().zip(&other.collision_cells) {
            a.collisions += b.collisions;
            a.at_gamma += b.at_gamma;
        }
        self
    }

    pub fn successes(&self) -> u64 {
        self.preimages + self.second_preimages
    }

    pub fn fails(&self, reason: FailReason) -> u64 {
        match reason {
            FailReason::BadQuery => self.fail_bad_query,
            FailReason::NoForgery => self.fail_no_forgery,
            FailReason::WrongPosition => self.fail_wrong_position,
            FailReason::CollisionElsewhere => self.fail_collision_elsewhere,
        }
    }

    pub fn forgery_rate(&self) -> Estimate {
        Estimate::wilson(self.valid_forgeries, self.trials)
    }

    pub fn success_rate(&self) -> Estimate {
        Estimate::wilson(self.successes(), self.trials)
    }

    pub fn output_rate(&self) -> Estimate {
        Estimate::wilson(self.outputs_one, self.trials)
    }

    pub fn b_alpha_eq_beta_rate(&self) -> Estimate {
        Estimate::wilson(self.b_alpha_eq_beta, self.trials)
    }

    fn record_reduction(&mut self, params: &Params, out: &ReductionOutcome) {
        let t = &out.trace;
        self.record_common(t.queried, out.within_budget(params), out.adversary_evaluations, out.machine_evaluations);
        self.valid_forgeries += t.forgery_valid as u64;
        self.fortunate += t.fortunate as u64;
        self.fortunate_below_beta += t.fortunate_below_beta as u64;
        self.b_alpha_eq_beta += (t.b_alpha == Some(t.beta as u32)) as u64;
        match &out.kind {
            OutcomeKind::Preimage(_) => self.preimages += 1,
            OutcomeKind::SecondPreimage(_) => self.second_preimages += 1,
            OutcomeKind::Fail(r) => match r {
                FailReason::BadQuery => self.fail_bad_query += 1,
                FailReason::NoForgery => self.fail_no_forgery += 1,
                FailReason::WrongPosition => self.fail_wrong_position += 1,
                FailReason::CollisionElsewhere => self.fail_collision_elsewhere += 1,
            },
        }
        let reaches_extraction = out.kind.is_success() || out.kind == OutcomeKind::Fail(FailReason::CollisionElsewhere);
        let consistent = reaches_extraction == t.fortunate_below_beta && (!t.fortunate_below_beta || t.fortunate);
        self.flag_violations += (!consistent) as u64;
        if let Some(level) = t.collision_level {
            let cell = &mut self.collision_cells[t.beta - 1];
            cell.collisions += 1;
            cell.at_gamma += (Some(level) == t.gamma) as u64;
        }
    }

    fn record_common(&mut self, queried: bool, within_budget: bool, adv: u64, machine: u64) {
        self.trials += 1;
        self.queries += queried as u64;
        self.budget_violations += (!within_budget) as u64;
        self.adversary_evaluations += adv;
        self.machine_evaluations += machine;
        self.max_machine_evaluations = self.max_machine_evaluations.max(machine);
    }

    fn empty_for(params: &Params, experiment: &Experiment) -> Self {
        let collision_cells = match experiment {
            Experiment::Reduction => (1..=params.chain_len())
                .map(|beta| CollisionCell {
                    beta,
                    ..Default::default()
                })
                .collect(),
            _ => Vec::new(),
        };
        Self {
            collision_cells,
            ..Default::default()
        }
    }
}

/// A binomial proportion with its Wilson score interval at 95%.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub successes: u64,
    pub trials: u64,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Estimate {
    /// With zero trials the interval is the whole of `[0, 1]`.
    pub fn wilson(successes: u64, trials: u64) -> Self {
        if trials == 0 {
            return Self {
                successes,
                trials,
                value: 0.0,
                lower: 0.0,
                upper: 1.0,
            };
        }
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = Z_95 * Z_95;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = Z_95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        Self {
            successes,
            trials,
            value: p,
            lower: (center - half).max(0.0),
            upper: (center + half).min(1.0),
        }
    }
}

/// Runs `config.trials` independent trials and merges their counts.
/// Deterministic in `config`.
pub fn run_trials(config: &TrialConfig) -> Result<TrialStats> {
    let params = config.params;
    if params.n() > TOY_MAX_BITS {
        return Err(Error::DomainTooLarge {
            bits: params.n(),
            max: TOY_MAX_BITS,
        });
    }
    if let Experiment::HybridBreaker { beta_star, i_star, .. } = config.experiment {
        if !(i_star < beta_star && beta_star <= params.chain_len()) {
            return Err(Error::IndexRange(format!(
                "need 0 <= i_star < beta_star <= {}, got i_star = {i_star}, beta_star = {beta_star}",
                params.chain_len()
            )));
        }
    }
    let factory = config.adversary.factory(&params);
    let empty = || TrialStats::empty_for(&params, &config.experiment);
    (0..config.trials)
        .into_par_iter()
        .try_fold(empty, |mut acc, i| {
            run_one(config, &factory, i, &mut acc)?;
            Ok(acc)
        })
        .try_reduce(empty, |a, b| Ok(a.merge(b)))
}

fn run_one(config: &TrialConfig, factory: &AdversaryFactory, index: u64, stats: &mut TrialStats) -> Result<()> {
    let params = &config.params;
    let mut rng = config.trial_rng(index);
    let mut adversary = factory.build();
    match config.experiment {
        Experiment::EuCma => {
            let (mut sk, pk) = keygen(params, &mut rng);
            let mut oracle = Oracle::new(pk.family_key());
            let query = adversary.choose_query(&pk, &mut oracle, &mut rng);
            let signed = match &query {
                Some(m) => Some((m.clone(), sk.sign(m)?)),
                None => None,
            };
            let forgery = adversary.forge(&pk, signed.as_ref().map(|(m, s)| (m, s)), &mut oracle, &mut rng);
            let valid = forgery
                .is_some_and(|(m2, s2)| query.as_ref() != Some(&m2) && pk.verify(&s2, &m2));
            stats.record_common(query.is_some(), true, oracle.evaluations(), 0);
            stats.valid_forgeries += valid as u64;
        }
        Experiment::Reduction => {
            let key = FamilyKey::sample(params.family(), &mut rng);
            let y_c = key.evaluate(&BitString::random(params.n(), &mut rng))?;
            let x_c = BitString::random(params.n(), &mut rng);
            match run_reduction(
                adversary.as_mut(),
                params,
                &key,
                &y_c,
                &x_c,
                &mut rng,
                config.leak_challenge_chain,
            ) {
                Ok(out) => stats.record_reduction(params, &out),
                Err(Error::InternalInconsistency(_)) => {
                    stats.trials += 1;
                    stats.internal_inconsistencies += 1;
                }
                Err(e) => return Err(e),
            }
        }
        Experiment::Distinguisher { sampling } => {
            let sample = UdChainSample::sample(params, sampling, &mut rng);
            let out = run_distinguisher(adversary.as_mut(), params, &sample, &mut rng, config.leak_challenge_chain)?;
            stats.record_common(
                out.trace.queried,
                out.within_budget(params),
                out.adversary_evaluations,
                out.machine_evaluations,
            );
            stats.outputs_one += out.output as u64;
            stats.valid_forgeries += out.trace.forgery_valid as u64;
            stats.fortunate += out.trace.fortunate as u64;
            stats.fortunate_below_beta += out.trace.fortunate_below_beta as u64;
            stats.b_alpha_eq_beta += (out.trace.b_alpha == Some(out.trace.beta as u32)) as u64;
        }
        Experiment::HybridBreaker {
            beta_star,
            i_star,
            sampling,
        } => {
            let sample = UdSample::sample(params, sampling, &mut rng);
            let out = run_hybrid_breaker(adversary.as_mut(), params, &sample, beta_star, i_star, &mut rng)?;
            stats.record_common(
                out.trace.queried,
                out.within_budget(params),
                out.adversary_evaluations,
                out.machine_evaluations,
            );
            stats.outputs_one += out.output as u64;
            stats.valid_forgeries += out.trace.forgery_valid as u64;
        }
    }
    Ok(())
}

/// Probability that a uniformly random message has digit `beta` on a
/// uniformly random chain `alpha`, for uniform `beta` in `1..=w-1`. The
/// reference point for how often a query lands exactly on the planted level.
/// Exact for `m <= 16`, estimated from `samples` messages otherwise.
pub fn uniform_b_alpha_eq_beta(params: &Params, samples: u64, seed: u64) -> f64 {
    let w1 = params.chain_len() as f64;
    let l = params.l() as f64;
    let hits = |m: &BitString| {
        let d = encode(m, params).expect("m-bit message");
        d.as_slice().iter().filter(|b| **b >= 1).count() as f64 / (l * w1)
    };
    if params.m() <= 16 {
        let total = 1u64 << params.m();
        (0..total).map(|v| hits(&BitString::from_u64(params.m(), v))).sum::<f64>() / total as f64
    } else {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (0..samples)
            .map(|_| hits(&BitString::random(params.m(), &mut rng)))
            .sum::<f64>()
            / samples as f64
    }
}

/// Verdict of the counting-bound check `epsilon_hat > epsilon / (l w)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The adversary never forged, so there is nothing to bound.
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingBoundCheck {
    pub verdict: Verdict,
    /// Lower Wilson bound of the key-generation distinguisher's output rate.
    pub epsilon_hat_lower: f64,
    /// Measured forgery rate divided by `l w`.
    pub threshold: f64,
}

impl CountingBoundCheck {
    pub fn evaluate(params: &Params, epsilon: &Estimate, epsilon_hat: &Estimate) -> Self {
        let threshold = epsilon.value / (params.l() as f64 * params.w() as f64);
        let verdict = if epsilon.successes == 0 {
            Verdict::NotApplicable
        } else if epsilon_hat.lower > threshold {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            verdict,
            epsilon_hat_lower: epsilon_hat.lower,
            threshold,
        }
    }
}

/// Everything the harness command reports for one adversary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessReport {
    pub params: Params,
    pub adversary: AdversaryKind,
    pub trials: u64,
    pub seed: u64,
    pub eu_cma: TrialStats,
    pub reduction: TrialStats,
    pub distinguisher_uniform: TrialStats,
    pub distinguisher_keygen: TrialStats,
    /// Forgery rate in the plain game.
    pub epsilon: Estimate,
    /// Output rate with a uniform value planted.
    pub epsilon_tilde: Estimate,
    /// Output rate with a key-generation value planted.
    pub epsilon_hat: Estimate,
    pub reduction_success: Estimate,
    pub counting_bound: CountingBoundCheck,
}

pub fn run_harness(params: &Params, adversary: AdversaryKind, trials: u64, seed: u64) -> Result<HarnessReport> {
    let run = |experiment| run_trials(&TrialConfig::new(*params, adversary, experiment, trials, seed));
    let eu_cma = run(Experiment::EuCma)?;
    let reduction = run(Experiment::Reduction)?;
    let distinguisher_uniform = run(Experiment::Distinguisher {
        sampling: ChainSampling::Uniform,
    })?;
    let distinguisher_keygen = run(Experiment::Distinguisher {
        sampling: ChainSampling::KeyGen,
    })?;
    let epsilon = eu_cma.forgery_rate();
    let epsilon_hat = distinguisher_keygen.output_rate();
    Ok(HarnessReport {
        params: *params,
        adversary,
        trials,
        seed,
        counting_bound: CountingBoundCheck::evaluate(params, &epsilon, &epsilon_hat),
        epsilon,
        epsilon_tilde: distinguisher_uniform.output_rate(),
        epsilon_hat,
        reduction_success: reduction.success_rate(),
        eu_cma,
        reduction,
        distinguisher_uniform,
        distinguisher_keygen,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_params;

    fn toy() -> Params {
        derive_params(8, 8, 4).unwrap()
    }

    #[test]
    fn wilson_known_values() {
        let e = Estimate::wilson(50, 100);
        assert!((e.lower - 0.4038).abs() < 1e-4 && (e.upper - 0.5962).abs() < 1e-4);
        let e = Estimate::wilson(0, 10);
        assert_eq!(e.lower, 0.0);
        assert!((e.upper - 0.2775).abs() < 1e-4);
        let e = Estimate::wilson(0, 0);
        assert_eq!((e.value, e.lower, e.upper), (0.0, 0.0, 1.0));
    }

    #[test]
    fn zero_trials_all_zero() {
        let c = TrialConfig::new(toy(), AdversaryKind::BruteForce, Experiment::Reduction, 0, 1);
        let s = run_trials(&c).unwrap();
        assert_eq!(s, TrialStats::empty_for(&toy(), &Experiment::Reduction));
        assert_eq!(s.trials, 0);
    }

    #[test]
    fn deterministic_in_seed() {
        let c = TrialConfig::new(toy(), AdversaryKind::BruteForce, Experiment::Reduction, 200, 9);
        assert_eq!(run_trials(&c).unwrap(), run_trials(&c).unwrap());
        let d = TrialConfig { seed: 10, ..c };
        assert_ne!(run_trials(&c).unwrap(), run_trials(&d).unwrap());
    }

    #[test]
    fn merge_is_order_independent() {
        let c = TrialConfig::new(toy(), AdversaryKind::Replay, Experiment::Reduction, 300, 3);
        let full = run_trials(&c).unwrap();
        let mut parts = TrialStats::empty_for(&toy(), &Experiment::Reduction);
        for i in (0..300).rev() {
            let mut s = TrialStats::empty_for(&toy(), &Experiment::Reduction);
            run_one(&c, &AdversaryKind::Replay.factory(&toy()), i, &mut s).unwrap();
            parts = s.merge(parts);
        }
        assert_eq!(full, parts);
    }

    #[test]
    fn give_up_never_forges() {
        let c = TrialConfig::new(toy(), AdversaryKind::GiveUp, Experiment::EuCma, 1000, 4);
        let s = run_trials(&c).unwrap();
        assert_eq!(s.trials, 1000);
        assert_eq!(s.valid_forgeries, 0);
    }

    #[test]
    fn large_n_is_refused() {
        let p = derive_params(128, 64, 16).unwrap();
        let c = TrialConfig::new(p, AdversaryKind::GiveUp, Experiment::EuCma, 1, 1);
        assert!(matches!(run_trials(&c), Err(Error::DomainTooLarge { bits: 128, .. })));
    }

    #[test]
    fn uniform_reference_toy() {
        // Oracle: count digits >= 1 over all messages directly.
        let p = toy();
        let mut total = 0u64;
        for v in 0..256u64 {
            total += encode(&BitString::from_u64(8, v), &p)
                .unwrap()
                .as_slice()
                .iter()
                .filter(|b| **b > 0)
                .count() as u64;
        }
        let expected = total as f64 / (256.0 * 6.0 * 3.0);
        assert!((uniform_b_alpha_eq_beta(&p, 0, 0) - expected).abs() < 1e-12);
    }
}
