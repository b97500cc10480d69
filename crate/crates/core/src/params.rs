//! Scheme constants and base-`w` encoding of messages with their checksum.

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::hash_family::FamilySpec;

/// Largest supported `log2(w)`.
pub const MAX_LOG_W: u32 = 16;
/// Largest supported message length in bits.
pub const MAX_MESSAGE_BITS: usize = 1 << 16;
/// Smallest supported security parameter.
pub const MIN_N: usize = 8;

/// Derived W-OTS+ constants.
///
/// `l1` digits carry the message, `l2` digits carry the checksum and `l` is
/// the total number of hash chains. Only constructible through
/// [`derive_params`], so the relations between the fields always hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ParamsSpec", into = "ParamsSpec")]
pub struct Params {
    n: usize,
    m: usize,
    w: u32,
    log_w: u32,
    l1: usize,
    l2: usize,
    l: usize,
}

/// Serialized form of [`Params`]; the derived fields are recomputed on load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamsSpec {
    pub n: usize,
    pub m: usize,
    pub w: u32,
}

impl TryFrom<ParamsSpec> for Params {
    type Error = Error;

    fn try_from(s: ParamsSpec) -> Result<Self> {
        derive_params(s.n, s.m, s.w)
    }
}

impl From<Params> for ParamsSpec {
    fn from(p: Params) -> Self {
        ParamsSpec {
            n: p.n,
            m: p.m,
            w: p.w,
        }
    }
}

/// Validates `(n, m, w)` and derives `l1`, `l2` and `l`.
///
/// `w` must be a power of two no larger than `2^16`, `m` must be at least
/// `log2 w`, and `n` must be a size some [`FamilySpec`] supports: `8..=20`
/// for the toy family or 128, 192 or 256 for the production one.
pub fn derive_params(n: usize, m: usize, w: u32) -> Result<Params> {
    let (l1, l2) = chain_counts(m, w)?;
    if n < MIN_N {
        return Err(Error::InvalidParameter(format!("n = {n} is below the floor of {MIN_N}")));
    }
    FamilySpec::for_bits(n)?;
    Ok(Params {
        n,
        m,
        w,
        log_w: w.trailing_zeros(),
        l1,
        l2,
        l: l1 + l2,
    })
}

/// `(l1, l2)` for `m`-bit messages in base `w`, with the same checks on `m`
/// and `w` as [`derive_params`] but none on `n`.
pub fn chain_counts(m: usize, w: u32) -> Result<(usize, usize)> {
    if w < 2 || !w.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("w = {w} is not a power of two >= 2")));
    }
    let log_w = w.trailing_zeros();
    if log_w > MAX_LOG_W {
        return Err(Error::InvalidParameter(format!("w = {w} exceeds 2^{MAX_LOG_W}")));
    }
    if m < log_w as usize {
        return Err(Error::InvalidParameter(format!("m = {m} is below log2(w) = {log_w}")));
    }
    if m > MAX_MESSAGE_BITS {
        return Err(Error::InvalidParameter(format!("m = {m} exceeds {MAX_MESSAGE_BITS}")));
    }
    let l1 = m.div_ceil(log_w as usize);
    // floor(log2(l1 (w-1)) / log2 w) is the largest k with w^k <= l1 (w-1).
    let max_checksum = l1 as u128 * (w as u128 - 1);
    let mut k = 0usize;
    let mut power = w as u128;
    while power <= max_checksum {
        k += 1;
        power *= w as u128;
    }
    Ok((l1, k + 1))
}

impl Params {
    pub fn new(n: usize, m: usize, w: u32) -> Result<Self> {
        derive_params(n, m, w)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn w(&self) -> u32 {
        self.w
    }

    pub fn log_w(&self) -> u32 {
        self.log_w
    }

    pub fn l1(&self) -> usize {
        self.l1
    }

    pub fn l2(&self) -> usize {
        self.l2
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// Number of chain steps from a secret seed to a public chain end, `w - 1`.
    pub fn chain_len(&self) -> usize {
        self.w as usize - 1
    }

    pub fn family(&self) -> FamilySpec {
        FamilySpec::for_bits(self.n).expect("validated in derive_params")
    }

    /// Largest checksum value, `l1 (w - 1)`.
    pub fn max_checksum(&self) -> u64 {
        self.l1 as u64 * (self.w as u64 - 1)
    }

    /// Extra evaluations the reduction may spend on top of the adversary's own:
    /// `3lw + w - 2`.
    pub fn reduction_overhead(&self) -> u64 {
        let (l, w) = (self.l as u64, self.w as u64);
        3 * l * w + w - 2
    }
}

/// The `l` base-`w` digits `b_1 .. b_l` signed by W-OTS+: message digits
/// followed by checksum digits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BaseWDigits {
    digits: Vec<u32>,
    l1: usize,
}

impl BaseWDigits {
    pub fn as_slice(&self) -> &[u32] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// Digit for chain `i`, 1-based as chains are numbered `1..=l`.
    pub fn chain_digit(&self, i: usize) -> u32 {
        self.digits[i - 1]
    }

    pub fn message_digits(&self) -> &[u32] {
        &self.digits[..self.l1]
    }

    pub fn checksum_digits(&self) -> &[u32] {
        &self.digits[self.l1..]
    }

    /// Count of digits above zero.
    pub fn nonzero_count(&self) -> usize {
        self.digits.iter().filter(|d| **d > 0).count()
    }
}

/// Splits an `m`-bit message into `l1` base-`w` digits (most significant first,
/// left-padded with zero bits to a whole number of digits) and appends the
/// `l2`-digit checksum `C = sum(w - 1 - M_i)`, also most significant first.
pub fn encode(message: &BitString, params: &Params) -> Result<BaseWDigits> {
    if message.len() != params.m {
        return Err(Error::InvalidLength {
            expected: params.m,
            actual: message.len(),
        });
    }
    let e = params.log_w as usize;
    let w = params.w as u64;
    let mut digits = Vec::with_capacity(params.l);
    let mut checksum = 0u64;
    for i in 0..params.l1 {
        let d = message.window_lsb((params.l1 - 1 - i) * e, e);
        checksum += w - 1 - d;
        digits.push(d as u32);
    }
    for j in 0..params.l2 {
        let shift = (params.l2 - 1 - j) * e;
        digits.push(((checksum >> shift) & (w - 1)) as u32);
    }
    Ok(BaseWDigits {
        digits,
        l1: params.l1,
    })
}
