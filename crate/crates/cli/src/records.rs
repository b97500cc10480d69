//! Machine-readable output: one JSON object per line, each tagged with a
//! `"record"` field naming its kind.
//!
//! | record      | fields |
//! |-------------|--------|
//! | `config`    | `n`, `m`, `w`, `l`, `adversary`, `trials`, `seed`, `leak_challenge_chain` |
//! | `stats`     | `experiment` plus every [`TrialStats`] field |
//! | `estimate`  | `name`, `successes`, `trials`, `value`, `lower`, `upper` |
//! | `reference` | `name`, `value` |
//! | `check`     | `name`, `verdict` (`pass`, `fail`, `not-applicable`), `epsilon_hat_lower`, `threshold` |
//! | `level`     | `attack`, `kind` (`new` or `prior`), `n`, `m`, `w`, `l`, `level`, `numeric` |
//! | `gap`       | `n`, `m`, `w`, `l`, `gap` |

use std::io::{self, Write};

use serde::Serialize;
use wotsplus::bounds::LevelRow;
use wotsplus::harness::{CountingBoundCheck, Estimate, TrialStats};

#[derive(Debug, Serialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
pub enum Record<'a> {
    Config {
        n: usize,
        m: usize,
        w: u32,
        l: usize,
        adversary: &'a str,
        trials: u64,
        seed: u64,
        leak_challenge_chain: bool,
    },
    Stats {
        experiment: String,
        #[serde(flatten)]
        stats: &'a TrialStats,
    },
    Estimate {
        name: &'a str,
        #[serde(flatten)]
        estimate: &'a Estimate,
    },
    Reference {
        name: &'a str,
        value: f64,
    },
    Check {
        name: &'a str,
        #[serde(flatten)]
        check: &'a CountingBoundCheck,
    },
    Level {
        #[serde(flatten)]
        row: &'a LevelRow,
    },
    Gap {
        n: usize,
        m: usize,
        w: u32,
        l: usize,
        gap: f64,
    },
}

pub fn write_record(out: &mut dyn Write, record: &Record<'_>) -> io::Result<()> {
    serde_json::to_writer(&mut *out, record)?;
    writeln!(out)
}
