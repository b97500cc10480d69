//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use wotsplus::bounds::{numeric_security_level, Attack, BoundKind};
use wotsplus::harness::{
    run_trials, uniform_b_alpha_eq_beta, AdversaryKind, ChainSampling, CountingBoundCheck, Experiment, TrialConfig,
    TrialStats, UdSampling, Verdict,
};
use wotsplus::{derive_params, encode, keygen, BitString, Params};

const TRIALS: u64 = 10_000;
const SEED: u64 = 0x5eed;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn toy() -> Params {
    derive_params(8, 8, 4).unwrap()
}

fn trials(adversary: AdversaryKind, experiment: Experiment, leak: bool) -> TrialStats {
    let mut c = TrialConfig::new(toy(), adversary, experiment, TRIALS, SEED);
    c.leak_challenge_chain = leak;
    run_trials(&c).unwrap()
}

fn round_trips() -> Outcome {
    let start = Instant::now();
    let mut rejected = 0;
    for n in [128, 256] {
        let p = derive_params(n, 256, 16).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(n as u64);
        for _ in 0..1000 {
            let (mut sk, pk) = keygen(&p, &mut rng);
            let msg = BitString::random(256, &mut rng);
            let sig = sk.sign(&msg).unwrap();
            rejected += !pk.verify(&sig, &msg) as u32;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        rejected == 0 && elapsed < Duration::from_secs(60),
        format!("2 x 1000 round trips, {rejected} rejected, {:.1} s", elapsed.as_secs_f64()),
    )
}

/// Base-4 digits of a 4-bit message followed by its checksum digits,
/// computed directly: two message digits, checksum sum(3 - b_i) in two digits.
fn oracle_digits(v: u64) -> [u32; 4] {
    let (b1, b2) = ((v >> 2) as u32 & 3, v as u32 & 3);
    let c = (3 - b1) + (3 - b2);
    [b1, b2, c >> 2, c & 3]
}

fn checksum() -> Outcome {
    let p = derive_params(8, 4, 4).unwrap();
    let mut mismatched = 0;
    for v in 0..16 {
        let lib = encode(&BitString::from_u64(4, v), &p).unwrap();
        mismatched += (lib.as_slice() != oracle_digits(v)) as u32;
    }
    let mut exceptions = 0;
    for a in 0..16 {
        for b in (0..16).filter(|b| *b != a) {
            let (da, db) = (oracle_digits(a), oracle_digits(b));
            exceptions += !db.iter().zip(&da).any(|(y, x)| y < x) as u32;
        }
    }
    outcome(
        exceptions == 0 && mismatched == 0,
        format!("240 ordered pairs, {exceptions} exceptions, {mismatched} encodings differ from direct computation"),
    )
}

fn parameters() -> Outcome {
    let p = derive_params(256, 256, 16).unwrap();
    let got = (p.l1(), p.l2(), p.l());
    outcome(got == (64, 3, 67), format!("(l1, l2, l) = {got:?}"))
}

fn seclevel_table() -> Outcome {
    let mut out = Vec::new();
    let code = wotsplus_cli::run(
        ["wotsplus", "seclevel", "--compare", "--format", "records"],
        &mut out,
        &mut std::io::sink(),
    );
    let records: Vec<serde_json::Value> = String::from_utf8(out)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let level = |attack: &str, kind: &str| {
        records
            .iter()
            .find(|r| r["record"] == "level" && r["attack"] == attack && r["kind"] == kind)
            .and_then(|r| r["level"].as_f64())
            .unwrap_or(f64::NAN)
    };
    let (new, prior) = (level("classical", "new"), level("classical", "prior"));
    let quantum_new = level("quantum", "new");
    // Closed forms evaluated here: new = 256 - log2(1072) - log2(33), prior = 256 - 4 - log2(1073).
    let expect_new = 256.0 - 1072f64.log2() - 33f64.log2();
    let expect_prior = 252.0 - 1073f64.log2();
    let expect_gap = (67.0 * 33.0 / 1073.0f64).log2();
    let gap = prior - new;
    let mut worst = 0.0f64;
    for attack in Attack::ALL {
        for kind in BoundKind::ALL {
            for exact in [false, true] {
                let closed = level(attack.name(), kind.name());
                let numeric = numeric_security_level(256, 16, 256, attack, kind, exact).unwrap();
                worst = worst.max((closed - numeric).abs());
            }
        }
    }
    let pass = code == 0
        && (new - expect_new).abs() < 1e-9
        && (prior - expect_prior).abs() < 1e-9
        && (quantum_new - (expect_new - 128.0)).abs() < 1e-9
        && (gap - 1.043).abs() <= 1e-3
        && (gap - expect_gap).abs() < 1e-9
        && worst < 1e-6;
    outcome(
        pass,
        format!(
            "new {new:.2}, prior {prior:.2}, quantum new {quantum_new:.2}, gap {gap:.4}, numeric root within {worst:.1e}"
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let p = toy();
    let mut results: Vec<(&str, Outcome)> = vec![
        ("1 scheme correctness", round_trips()),
        ("2 checksum anti-forgery", checksum()),
        ("3 parameter reproduction", parameters()),
        ("4 security-level table", seclevel_table()),
    ];

    let reduction = trials(AdversaryKind::BruteForce, Experiment::Reduction, false);
    results.push((
        "5 extraction soundness",
        outcome(
            reduction.internal_inconsistencies == 0 && reduction.successes() > 0,
            format!(
                "{} trials, {} preimages, {} second preimages, {} inconsistencies",
                reduction.trials, reduction.preimages, reduction.second_preimages, reduction.internal_inconsistencies
            ),
        ),
    ));

    let eu_cma = trials(AdversaryKind::BruteForce, Experiment::EuCma, false);
    let keygen_dist = trials(
        AdversaryKind::BruteForce,
        Experiment::Distinguisher {
            sampling: ChainSampling::KeyGen,
        },
        false,
    );
    let check = CountingBoundCheck::evaluate(&p, &eu_cma.forgery_rate(), &keygen_dist.output_rate());
    results.push((
        "6 counting-bound",
        outcome(
            check.verdict == Verdict::Pass,
            format!(
                "epsilon {:.4}, epsilon-hat {:.4} (lower {:.4}) vs epsilon / (lw) = {:.4}",
                eu_cma.forgery_rate().value,
                keygen_dist.output_rate().value,
                check.epsilon_hat_lower,
                check.threshold
            ),
        ),
    ));

    let leaked = trials(AdversaryKind::Nasty, Experiment::Reduction, true);
    let probing = trials(AdversaryKind::Nasty, Experiment::Reduction, false);
    let hybrid = trials(
        AdversaryKind::BruteForce,
        Experiment::HybridBreaker {
            beta_star: 2,
            i_star: 0,
            sampling: UdSampling::Family,
        },
        false,
    );
    let runs = [&reduction, &eu_cma, &keygen_dist, &leaked, &probing, &hybrid];
    let violations: u64 = runs.iter().map(|s| s.budget_violations).sum();
    let max_machine = runs.iter().map(|s| s.max_machine_evaluations).max().unwrap();
    results.push((
        "7 budget accounting",
        outcome(
            violations == 0,
            format!(
                "{} trials checked, {violations} violations, machine evaluations at most {max_machine} (allowance {})",
                runs.iter().map(|s| s.trials).sum::<u64>(),
                p.reduction_overhead()
            ),
        ),
    ));

    let baseline = uniform_b_alpha_eq_beta(&p, 0, SEED);
    let rate = leaked.b_alpha_eq_beta_rate().value;
    let probe = probing.b_alpha_eq_beta_rate().value;
    results.push((
        "8 low-digit adversary",
        outcome(
            rate <= 0.01 * baseline,
            format!(
                "Pr[b_alpha = beta] = {rate:.4} with the challenge chain known, {probe:.4} ({:.1}% of baseline) when \
                 probing for it; uniform baseline {baseline:.4}, 1/w = {:.4}",
                100.0 * probe / baseline,
                1.0 / p.w() as f64
            ),
        ),
    ));

    let mut failed = 0;
    for (name, o) in &results {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += !o.pass as u32;
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1} s",
        results.len() as u32 - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
