//! W-OTS+ one-time signatures, plus a simulator for the oracle machines used in
//! its EU-CMA security reduction.
//!
//! The crate is split into:
//!
//! - [`params`]: scheme constants and base-`w` message encoding with checksum.
//! - [`hash_family`]: the keyed function family `f_k`, bitmask vectors and the
//!   chaining function.
//! - [`wots`]: key generation, signing and verification, with canonical byte
//!   encodings.
//! - [`harness`]: the reduction's oracle machines driven by pluggable
//!   adversaries, brute-force oracles for toy parameters and a trial runner.
//! - [`bounds`]: insecurity bounds and the security levels they imply.

pub mod bits;
pub mod bounds;
mod error;
pub mod hash_family;
pub mod harness;
pub mod params;
pub mod wots;

pub use bits::BitString;
pub use error::{Error, Result};
pub use hash_family::{chain, BitmaskVector, EvalCount, FamilyKey, FamilySpec, FamilyVariant};
pub use params::{chain_counts, derive_params, encode, BaseWDigits, Params};
pub use wots::{keygen, keygen_counted, PublicKey, SecretKey, Signature};
