//! Insecurity bounds for W-OTS+ and the security levels they imply.
//!
//! Two bounds on the EU-CMA insecurity of W-OTS+ with one signing query are
//! implemented, both in terms of the insecurities of `f_k` against
//! one-wayness (OW), second preimages (SPR) and undetectability (UD):
//!
//! ```text
//! new:   l w (w UD(t~) + OW(t~) + w SPR(t~))        t~ = t + 3lw + w - 2
//! prior: w l max(OW(t'), w SPR(t')) + w UD(t*)      t' = t + 3lw, t* = t + 3lw + w - 1
//! ```
//!
//! Attacks are modelled by brute force: every component insecurity is
//! `t / 2^n` classically and `t / 2^(n/2)` with Grover search. The security
//! level `b` is the value for which an attack succeeding with probability
//! one half needs `2^(b-1)` evaluations.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::chain_counts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attack {
    Classical,
    Quantum,
}

impl Attack {
    pub const ALL: [Attack; 2] = [Attack::Classical, Attack::Quantum];

    pub fn name(&self) -> &'static str {
        match self {
            Attack::Classical => "classical",
            Attack::Quantum => "quantum",
        }
    }

    /// Bits of brute-force work: `n`, or `n / 2` under Grover search.
    pub fn effective_bits(&self, n: usize) -> f64 {
        match self {
            Attack::Classical => n as f64,
            Attack::Quantum => n as f64 / 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    New,
    Prior,
}

impl BoundKind {
    pub const ALL: [BoundKind; 2] = [BoundKind::Prior, BoundKind::New];

    pub fn name(&self) -> &'static str {
        match self {
            BoundKind::New => "new",
            BoundKind::Prior => "prior",
        }
    }
}

/// Brute-force insecurity of `f_k`. OW, SPR and UD share the same model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InSecModel {
    pub attack: Attack,
}

impl InSecModel {
    pub fn new(attack: Attack) -> Self {
        Self { attack }
    }

    /// `min(1, t / 2^n)`, or `min(1, t / 2^(n/2))` for a quantum attack.
    pub fn insec(&self, t: f64, n: usize) -> f64 {
        (t / self.attack.effective_bits(n).exp2()).min(1.0)
    }
}

/// Running times the bounds charge, given the adversary's time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Runtimes {
    /// `t + 3lw + w - 2`, for all three components of the new bound.
    pub t_tilde: f64,
    /// `t + 3lw`, for OW and SPR in the prior bound.
    pub t_prime: f64,
    /// `t + 3lw + w - 1`, for UD in the prior bound.
    pub t_star: f64,
}

impl Runtimes {
    pub fn new(t: f64, l: usize, w: u32) -> Self {
        let (l, w) = (l as f64, w as f64);
        let base = t + 3.0 * l * w;
        Self {
            t_tilde: base + w - 2.0,
            t_prime: base,
            t_star: base + w - 1.0,
        }
    }
}

fn check_component(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::OutOfRange(format!("{name} insecurity {v} outside [0, 1]")));
    }
    Ok(())
}

fn check_components(ow: f64, spr: f64, ud: f64) -> Result<()> {
    check_component("OW", ow)?;
    check_component("SPR", spr)?;
    check_component("UD", ud)
}

/// `l w (w ud + ow + w spr)`, clamped to 1.
pub fn new_bound(l: usize, w: u32, ow: f64, spr: f64, ud: f64) -> Result<f64> {
    check_components(ow, spr, ud)?;
    let (l, w) = (l as f64, w as f64);
    Ok((l * w * (w * ud + ow + w * spr)).min(1.0))
}

/// `w l max(ow, w spr) + w ud`, clamped to 1.
pub fn prior_bound(l: usize, w: u32, ow: f64, spr: f64, ud: f64) -> Result<f64> {
    check_components(ow, spr, ud)?;
    let (l, w) = (l as f64, w as f64);
    Ok((w * l * ow.max(w * spr) + w * ud).min(1.0))
}

/// The bound of `kind` against an adversary running for `t` evaluations, with
/// each component evaluated at the running time that bound charges.
pub fn bound_at(kind: BoundKind, model: InSecModel, n: usize, l: usize, w: u32, t: f64) -> f64 {
    let rt = Runtimes::new(t, l, w);
    let result = match kind {
        BoundKind::New => {
            let e = model.insec(rt.t_tilde, n);
            new_bound(l, w, e, e, e)
        }
        BoundKind::Prior => {
            let e = model.insec(rt.t_prime, n);
            prior_bound(l, w, e, e, model.insec(rt.t_star, n))
        }
    };
    result.expect("brute-force insecurities lie in [0, 1]")
}

/// Closed-form level for `l` chains in base `w` against `bits` of brute-force
/// work, neglecting the reduction's overhead next to `t`:
/// `bits - log2(lw) - log2(2w + 1)` for the new bound and
/// `bits - log2 w - log2(lw + 1)` for the prior one.
pub fn level_closed_form(kind: BoundKind, bits: f64, l: usize, w: u32) -> f64 {
    let (l, w) = (l as f64, w as f64);
    match kind {
        BoundKind::New => bits - (l * w).log2() - (2.0 * w + 1.0).log2(),
        BoundKind::Prior => bits - w.log2() - (l * w + 1.0).log2(),
    }
}

/// How many bits lower the new level is than the prior one:
/// `log2(l (2w + 1) / (lw + 1))`.
pub fn level_gap(l: usize, w: u32) -> f64 {
    let (l, w) = (l as f64, w as f64);
    (l * (2.0 * w + 1.0) / (l * w + 1.0)).log2()
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    Ok(())
}

/// Security level in bits for `(n, w, m)` by the closed form.
pub fn security_level(n: usize, w: u32, m: usize, attack: Attack, kind: BoundKind) -> Result<f64> {
    check_n(n)?;
    let (l1, l2) = chain_counts(m, w)?;
    Ok(level_closed_form(kind, attack.effective_bits(n), l1 + l2, w))
}

/// Security level found by solving `bound(t) = 1/2` for `t` numerically and
/// returning `log2 t + 1`. With `exact_runtimes` the bound is evaluated at
/// `t~`, `t'` and `t*`; otherwise at `t` itself, which is what the closed
/// form assumes.
pub fn numeric_security_level(
    n: usize,
    w: u32,
    m: usize,
    attack: Attack,
    kind: BoundKind,
    exact_runtimes: bool,
) -> Result<f64> {
    check_n(n)?;
    let (l1, l2) = chain_counts(m, w)?;
    let l = l1 + l2;
    let model = InSecModel::new(attack);
    let bits = attack.effective_bits(n);
    let g = |log_t: f64| {
        let t = log_t.exp2();
        let value = if exact_runtimes {
            bound_at(kind, model, n, l, w, t)
        } else {
            let e = model.insec(t, n);
            match kind {
                BoundKind::New => new_bound(l, w, e, e, e),
                BoundKind::Prior => prior_bound(l, w, e, e, e),
            }
            .expect("in range")
        };
        value - 0.5
    };
    // g is non-decreasing, negative at t = 1/2^(64) and at least 1/2 once
    // t reaches 2^bits.
    let (mut lo, mut hi) = (-64.0f64, bits + 1.0);
    if g(lo) >= 0.0 {
        return Err(Error::OutOfRange(format!(
            "bound already reaches 1/2 at t = 2^{lo}; the overhead alone breaks these parameters"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (lo + hi) + 1.0)
}

/// One bound evaluated at one adversary running time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub attack: Attack,
    pub n: usize,
    pub m: usize,
    pub w: u32,
    pub l: usize,
    pub log2_t: f64,
    pub runtimes: Runtimes,
    pub insecurity: f64,
    /// Closed-form security level for these parameters.
    pub level: f64,
}

impl BoundReport {
    pub fn at(n: usize, w: u32, m: usize, attack: Attack, kind: BoundKind, log2_t: f64) -> Result<Self> {
        check_n(n)?;
        let (l1, l2) = chain_counts(m, w)?;
        let l = l1 + l2;
        let t = log2_t.exp2();
        Ok(Self {
            kind,
            attack,
            n,
            m,
            w,
            l,
            log2_t,
            runtimes: Runtimes::new(t, l, w),
            insecurity: bound_at(kind, InSecModel::new(attack), n, l, w, t),
            level: level_closed_form(kind, attack.effective_bits(n), l, w),
        })
    }
}

/// One cell of the level comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub attack: Attack,
    pub kind: BoundKind,
    pub n: usize,
    pub m: usize,
    pub w: u32,
    pub l: usize,
    /// Closed form.
    pub level: f64,
    /// Numeric root with exact running times.
    pub numeric: f64,
}

/// Both bounds under both attack models, prior first.
pub fn comparison_rows(n: usize, w: u32, m: usize) -> Result<Vec<LevelRow>> {
    let (l1, l2) = chain_counts(m, w)?;
    let mut rows = Vec::new();
    for attack in Attack::ALL {
        for kind in BoundKind::ALL {
            rows.push(LevelRow {
                attack,
                kind,
                n,
                m,
                w,
                l: l1 + l2,
                level: security_level(n, w, m, attack, kind)?,
                numeric: numeric_security_level(n, w, m, attack, kind, true)?,
            });
        }
    }
    Ok(rows)
}

/// Text table with one row per attack model and one column per bound, the
/// formula row first. Levels are printed with two decimals, or rounded down
/// to whole bits with `floor`.
pub fn render_comparison(rows: &[LevelRow], floor: bool) -> String {
    let fmt = |v: f64| {
        if floor {
            format!("{}", v.floor())
        } else {
            format!("{v:.2}")
        }
    };
    let mut out = String::new();
    let Some(first) = rows.first() else {
        return out;
    };
    let _ = writeln!(out, "n = {}, m = {}, w = {}, l = {}", first.n, first.m, first.w, first.l);
    let _ = writeln!(out, "{:<10} {:>28} {:>28} {:>8}", "", "prior", "new", "gap");
    let _ = writeln!(
        out,
        "{:<10} {:>28} {:>28} {:>8}",
        "formula", "n' - log w - log(lw+1)", "n' - log(lw) - log(2w+1)", ""
    );
    for attack in Attack::ALL {
        let get = |kind| rows.iter().find(|r| r.attack == attack && r.kind == kind);
        if let (Some(p), Some(c)) = (get(BoundKind::Prior), get(BoundKind::New)) {
            let _ = writeln!(
                out,
                "{:<10} {:>28} {:>28} {:>8.3}",
                attack.name(),
                fmt(p.level),
                fmt(c.level),
                p.level - c.level
            );
        }
    }
    let _ = writeln!(out, "n' = n classically, n/2 under Grover search");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_components() {
        assert_eq!(new_bound(67, 16, 0.0, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(prior_bound(67, 16, 0.0, 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn equal_components_collapse() {
        let e = 1e-9;
        let new = new_bound(67, 16, e, e, e).unwrap();
        assert!((new - 67.0 * 16.0 * 33.0 * e).abs() < 1e-18);
        let prior = prior_bound(67, 16, e, e, e).unwrap();
        assert!((prior - (67.0 * 256.0 + 16.0) * e).abs() < 1e-18);
    }

    #[test]
    fn clamped_and_range_checked() {
        assert_eq!(new_bound(67, 16, 0.5, 0.5, 0.5).unwrap(), 1.0);
        assert!(matches!(new_bound(67, 16, 1.5, 0.0, 0.0), Err(Error::OutOfRange(_))));
        assert!(matches!(prior_bound(67, 16, 0.0, -0.1, 0.0), Err(Error::OutOfRange(_))));
        assert!(matches!(new_bound(67, 16, 0.0, 0.0, f64::NAN), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn example_value() {
        let e = (-216.0f64).exp2();
        let b = new_bound(67, 16, e, e, e).unwrap();
        // 1072 * 33 * 2^-216
        assert!((b.log2() - (1072.0f64 * 33.0).log2() + 216.0).abs() < 1e-12);
        assert!((b.log2() + 200.89).abs() < 0.01);
    }

    #[test]
    fn insec_model() {
        let c = InSecModel::new(Attack::Classical);
        let q = InSecModel::new(Attack::Quantum);
        assert_eq!(c.insec(1024.0, 20), 1024.0 / 1048576.0);
        assert_eq!(q.insec(1024.0, 20), 1.0);
        assert_eq!(c.insec(2f64.powi(300), 256), 1.0);
    }

    #[test]
    fn runtimes() {
        let r = Runtimes::new(100.0, 67, 16);
        assert_eq!(r.t_tilde, 100.0 + 3216.0 + 14.0);
        assert_eq!(r.t_prime, 100.0 + 3216.0);
        assert_eq!(r.t_star, 100.0 + 3216.0 + 15.0);
    }

    #[test]
    fn closed_form_examples() {
        let new = security_level(256, 16, 256, Attack::Classical, BoundKind::New).unwrap();
        let prior = security_level(256, 16, 256, Attack::Classical, BoundKind::Prior).unwrap();
        let quantum = security_level(256, 16, 256, Attack::Quantum, BoundKind::New).unwrap();
        assert!((new - 240.89).abs() < 0.01, "{new}");
        assert!((prior - 241.93).abs() < 0.01, "{prior}");
        assert!((quantum - 112.89).abs() < 0.01, "{quantum}");
    }

    #[test]
    fn numeric_root_toy_overhead_matters() {
        // At n = 16 the overhead is not negligible, so the exact-runtime root
        // sits below the closed form.
        let closed = security_level(16, 4, 8, Attack::Classical, BoundKind::New).unwrap();
        let exact = numeric_security_level(16, 4, 8, Attack::Classical, BoundKind::New, true).unwrap();
        let plain = numeric_security_level(16, 4, 8, Attack::Classical, BoundKind::New, false).unwrap();
        assert!((plain - closed).abs() < 1e-6);
        assert!(exact < closed);
    }

    #[test]
    fn table_renders() {
        let rows = comparison_rows(256, 16, 256).unwrap();
        assert_eq!(rows.len(), 4);
        let text = render_comparison(&rows, false);
        assert!(text.contains("240.89") && text.contains("241.93") && text.contains("112.89"));
        assert!(render_comparison(&rows, true).contains(" 240 "));
    }
}
