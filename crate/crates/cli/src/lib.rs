//! The `wotsplus` command line.
//!
//! Exit codes are stable:
//!
//! | code | meaning |
//! |------|---------|
//! | 0    | success; for `verify`, the signature was accepted |
//! | 1    | `verify` rejected, or the operation failed (I/O, key already used) |
//! | 2    | an input file is malformed or unreadable |
//! | 3    | usage error: bad arguments or unsupported parameters |

pub mod digest;
pub mod keystore;
pub mod records;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;
use wotsplus::bounds::{self, Attack, BoundKind};
use wotsplus::harness::{run_harness, uniform_b_alpha_eq_beta, AdversaryKind, HarnessReport, Verdict};
use wotsplus::derive_params;

use crate::digest::MESSAGE_TAG;
use crate::keystore::{keygen_to_dir, sign_file, verify_files, NoFaults};
use crate::records::{write_record, Record};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECT: i32 = 1;
pub const EXIT_MALFORMED: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

/// Seeds the RNG when `--seed` is not given. Meant for tests.
pub const SEED_ENV: &str = "WOTSPLUS_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] wotsplus::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use wotsplus::Error as E;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(E::InvalidParameter(_) | E::DomainTooLarge { .. } | E::IndexRange(_)) => EXIT_USAGE,
            CliError::Core(E::MalformedEncoding { .. }) => EXIT_MALFORMED,
            _ => EXIT_REJECT,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "wotsplus", version, about = "W-OTS+ one-time signatures and reduction experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Records,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttackArg {
    Classical,
    Quantum,
}

impl From<AttackArg> for Attack {
    fn from(a: AttackArg) -> Self {
        match a {
            AttackArg::Classical => Attack::Classical,
            AttackArg::Quantum => Attack::Quantum,
        }
    }
}

/// `toy` for `(n, m, w) = (8, 8, 4)`, or an explicit `n,m,w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamsArg {
    pub n: usize,
    pub m: usize,
    pub w: u32,
}

impl FromStr for ParamsArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "toy" {
            return Ok(ParamsArg { n: 8, m: 8, w: 4 });
        }
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [n, m, w] = parts[..] else {
            return Err(format!("expected 'toy' or 'n,m,w', got '{s}'"));
        };
        let num = |x: &str| x.parse::<u64>().map_err(|e| format!("'{x}': {e}"));
        Ok(ParamsArg {
            n: num(n)? as usize,
            m: num(m)? as usize,
            w: u32::try_from(num(w)?).map_err(|e| e.to_string())?,
        })
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a key pair and write key.sk and key.pub into a directory.
    Keygen {
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, default_value_t = 16)]
        w: u32,
        #[arg(long, default_value_t = 256)]
        m: usize,
        #[arg(long)]
        out: PathBuf,
        /// Deterministic key generation from this seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sign a file once. The key is marked used before the signature is written.
    Sign {
        #[arg(long)]
        key: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify a signature on a file.
    Verify {
        #[arg(long = "pub")]
        public: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        sig: PathBuf,
    },
    /// Security level in bits implied by the insecurity bounds.
    Seclevel {
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, default_value_t = 16)]
        w: u32,
        #[arg(long, default_value_t = 256)]
        m: usize,
        #[arg(long, value_enum, default_value_t = AttackArg::Classical)]
        attack: AttackArg,
        /// Show both bounds under both attack models.
        #[arg(long)]
        compare: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Round levels down to whole bits in text output.
        #[arg(long)]
        floor: bool,
    },
    /// Run the reduction experiments against a built-in adversary.
    Harness {
        /// `toy` or `n,m,w` with n at most 20.
        #[arg(long, default_value = "toy")]
        params: ParamsArg,
        #[arg(long, default_value = "brute-force")]
        adversary: String,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

fn resolve_seed(arg: Option<u64>) -> Result<Option<u64>, CliError> {
    if arg.is_some() {
        return Ok(arg);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|e| CliError::Usage(format!("{SEED_ENV}={v}: {e}"))),
        Err(_) => Ok(None),
    }
}

fn io_out(e: std::io::Error) -> CliError {
    CliError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match command {
        Command::Keygen { n, w, m, out: dir, seed } => {
            let params = derive_params(n, m, w)?;
            let mut rng = match resolve_seed(seed)? {
                Some(s) => ChaCha20Rng::seed_from_u64(s),
                None => ChaCha20Rng::from_entropy(),
            };
            let k = keygen_to_dir(&params, &dir, &mut rng)?;
            writeln!(out, "secret key: {}", k.secret_path.display()).map_err(io_out)?;
            writeln!(out, "public key: {}", k.public_path.display()).map_err(io_out)?;
            writeln!(out, "fingerprint: {}", k.fingerprint).map_err(io_out)?;
            Ok(EXIT_OK)
        }
        Command::Sign { key, input, out: sig } => {
            let s = sign_file(&key, &input, &sig, &NoFaults)?;
            writeln!(out, "signature: {}", sig.display()).map_err(io_out)?;
            writeln!(out, "usage marker: {}", s.marker.display()).map_err(io_out)?;
            writeln!(
                out,
                "note: the input was digested to {} bits (SHA-256 counter mode, tag {}); \
                 this step is outside the scheme's security proof, which covers fixed-length messages",
                s.message.len(),
                String::from_utf8_lossy(MESSAGE_TAG)
            )
            .map_err(io_out)?;
            Ok(EXIT_OK)
        }
        Command::Verify { public, input, sig } => match verify_files(&public, &input, &sig) {
            Ok(true) => {
                writeln!(out, "OK").map_err(io_out)?;
                Ok(EXIT_OK)
            }
            Ok(false) => {
                writeln!(out, "REJECT").map_err(io_out)?;
                Ok(EXIT_REJECT)
            }
            Err(CliError::Io { path, source }) => Err(CliError::Core(wotsplus::Error::MalformedEncoding {
                offset: 0,
                reason: format!("cannot read {}: {source}", path.display()),
            })),
            Err(e) => Err(e),
        },
        Command::Seclevel {
            n,
            w,
            m,
            attack,
            compare,
            format,
            floor,
        } => seclevel(out, n, w, m, attack.into(), compare, format, floor),
        Command::Harness {
            params,
            adversary,
            trials,
            seed,
            format,
        } => {
            let p = derive_params(params.n, params.m, params.w)?;
            let kind: AdversaryKind = adversary.parse()?;
            let seed = resolve_seed(seed)?.unwrap_or(0);
            let report = run_harness(&p, kind, trials, seed)?;
            let reference = uniform_b_alpha_eq_beta(&p, 100_000, seed);
            match format {
                Format::Text => write_harness_text(out, &report, reference),
                Format::Records => write_harness_records(out, &report, reference),
            }
            .map_err(io_out)?;
            Ok(EXIT_OK)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn seclevel(
    out: &mut dyn Write,
    n: usize,
    w: u32,
    m: usize,
    attack: Attack,
    compare: bool,
    format: Format,
    floor: bool,
) -> Result<i32, CliError> {
    let mut rows = bounds::comparison_rows(n, w, m)?;
    if !compare {
        rows.retain(|r| r.attack == attack && r.kind == BoundKind::New);
    }
    let (l, gap) = (rows[0].l, bounds::level_gap(rows[0].l, w));
    match format {
        Format::Records => {
            for row in &rows {
                write_record(out, &Record::Level { row }).map_err(io_out)?;
            }
            write_record(out, &Record::Gap { n, m, w, l, gap }).map_err(io_out)?;
        }
        Format::Text if compare => {
            write!(out, "{}", bounds::render_comparison(&rows, floor)).map_err(io_out)?;
            let worst = rows.iter().map(|r| (r.level - r.numeric).abs()).fold(0.0, f64::max);
            writeln!(out, "closed form vs numeric root: max difference {worst:.3e} bits").map_err(io_out)?;
        }
        Format::Text => {
            let r = &rows[0];
            let level = if floor { format!("{}", r.level.floor()) } else { format!("{:.2}", r.level) };
            writeln!(
                out,
                "b = {level} bits (new bound, {} attack; n = {n}, m = {m}, w = {w}, l = {l})",
                attack.name()
            )
            .map_err(io_out)?;
        }
    }
    Ok(EXIT_OK)
}

fn ci(e: &wotsplus::harness::Estimate) -> String {
    format!("{:.4}  [{:.4}, {:.4}]  ({}/{})", e.value, e.lower, e.upper, e.successes, e.trials)
}

fn write_harness_text(out: &mut dyn Write, r: &HarnessReport, reference: f64) -> std::io::Result<()> {
    let p = &r.params;
    let red = &r.reduction;
    writeln!(out, "parameters: n = {}, m = {}, w = {}, l = {}", p.n(), p.m(), p.w(), p.l())?;
    writeln!(out, "adversary: {}, trials: {}, seed: {}", r.adversary.name(), r.trials, r.seed)?;
    writeln!(out, "epsilon (forgery rate)            {}", ci(&r.epsilon))?;
    writeln!(out, "epsilon-tilde (uniform planted)   {}", ci(&r.epsilon_tilde))?;
    writeln!(out, "epsilon-hat (key-gen planted)     {}", ci(&r.epsilon_hat))?;
    writeln!(out, "reduction success                 {}", ci(&r.reduction_success))?;
    writeln!(
        out,
        "extraction: {} preimages, {} second preimages",
        red.preimages, red.second_preimages
    )?;
    writeln!(
        out,
        "failures: bad-query {}, no-forgery {}, wrong-position {}, collision-elsewhere {}",
        red.fail_bad_query, red.fail_no_forgery, red.fail_wrong_position, red.fail_collision_elsewhere
    )?;
    writeln!(
        out,
        "fortunate forgeries: {} with b'_alpha < b_alpha, {} with b'_alpha < beta",
        red.fortunate, red.fortunate_below_beta
    )?;
    writeln!(
        out,
        "queries with b_alpha = beta: {:.4} (uniform queries: {reference:.4})",
        red.b_alpha_eq_beta_rate().value
    )?;
    for cell in red.collision_cells.iter().filter(|c| c.collisions > 0) {
        writeln!(
            out,
            "beta = {}: {} collisions, {} at gamma (expected fraction {:.3})",
            cell.beta,
            cell.collisions,
            cell.at_gamma,
            1.0 / (p.chain_len() - cell.beta) as f64
        )?;
    }
    let stats = [&r.eu_cma, &r.reduction, &r.distinguisher_uniform, &r.distinguisher_keygen];
    writeln!(
        out,
        "budget: machine evaluations at most {} per trial (allowance 3lw + w - 2 = {}), {} violations",
        stats.iter().map(|s| s.max_machine_evaluations).max().unwrap_or(0),
        p.reduction_overhead(),
        stats.iter().map(|s| s.budget_violations).sum::<u64>()
    )?;
    writeln!(
        out,
        "internal inconsistencies: {}, flag violations: {}",
        red.internal_inconsistencies, red.flag_violations
    )?;
    let c = &r.counting_bound;
    let verdict = match c.verdict {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
        Verdict::NotApplicable => "N/A (no forgeries)",
    };
    writeln!(
        out,
        "counting-bound: {verdict} (epsilon-hat lower {:.4} vs epsilon / (lw) = {:.4})",
        c.epsilon_hat_lower, c.threshold
    )
}

fn write_harness_records(out: &mut dyn Write, r: &HarnessReport, reference: f64) -> std::io::Result<()> {
    let p = &r.params;
    write_record(
        out,
        &Record::Config {
            n: p.n(),
            m: p.m(),
            w: p.w(),
            l: p.l(),
            adversary: r.adversary.name(),
            trials: r.trials,
            seed: r.seed,
            leak_challenge_chain: false,
        },
    )?;
    for (experiment, stats) in [
        ("eu-cma", &r.eu_cma),
        ("reduction", &r.reduction),
        ("distinguisher-uniform", &r.distinguisher_uniform),
        ("distinguisher-keygen", &r.distinguisher_keygen),
    ] {
        write_record(
            out,
            &Record::Stats {
                experiment: experiment.into(),
                stats,
            },
        )?;
    }
    let b_eq = r.reduction.b_alpha_eq_beta_rate();
    for (name, estimate) in [
        ("epsilon", &r.epsilon),
        ("epsilon-tilde", &r.epsilon_tilde),
        ("epsilon-hat", &r.epsilon_hat),
        ("reduction-success", &r.reduction_success),
        ("b-alpha-eq-beta", &b_eq),
    ] {
        write_record(out, &Record::Estimate { name, estimate })?;
    }
    write_record(
        out,
        &Record::Reference {
            name: "uniform-b-alpha-eq-beta",
            value: reference,
        },
    )?;
    write_record(
        out,
        &Record::Check {
            name: "counting-bound",
            check: &r.counting_bound,
        },
    )
}
