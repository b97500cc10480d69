//! Simulation of the security reduction at toy parameters.
//!
//! [`machines`] holds the oracle machines, [`adversary`] the forgers they
//! wrap, [`brute`] exhaustive-search oracles and [`trials`] the statistics
//! runner. Running time everywhere is the number of `f_k` evaluations.

pub mod adversary;
pub mod brute;
pub mod machines;
pub mod trials;

pub use adversary::{Adversary, AdversaryFactory, AdversaryKind, Oracle};
pub use brute::{brute_force_ow, brute_force_spr, FunctionTable};
pub use machines::{
    answer_query, extract, plant_challenges, plant_challenges_at, run_distinguisher, run_hybrid_breaker,
    run_reduction, ChainSampling, ChallengeSpec, DistinguisherOutcome, FailReason, OutcomeKind, PlantedKey,
    QueryAnswer, ReductionOutcome, TrialTrace, UdChainSample, UdSample, UdSampling,
};
pub use trials::{
    run_harness, run_trials, uniform_b_alpha_eq_beta, CollisionCell, CountingBoundCheck, Estimate, Experiment,
    HarnessReport, TrialConfig, TrialStats, Verdict,
};
