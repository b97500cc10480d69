//! Reduces arbitrary input files to `m`-bit messages.
//!
//! Block `i` (from 0) is
//! `SHA-256(MESSAGE_TAG || u32_be(m) || u32_be(i) || input)`; the blocks are
//! concatenated, the first `ceil(m / 8)` bytes are kept and the unused
//! high-order bits of the first byte are cleared. The signature scheme's
//! security argument covers `m`-bit messages only; this step sits outside it.

use sha2::{Digest, Sha256};
use wotsplus::BitString;

pub const MESSAGE_TAG: &[u8] = b"wotsplus/message-digest/v1";

pub fn digest_message(input: &[u8], m: usize) -> BitString {
    let nbytes = m.div_ceil(8);
    let mut out = Vec::with_capacity(nbytes + 32);
    let mut block = 0u32;
    while out.len() < nbytes {
        let h = Sha256::new()
            .chain_update(MESSAGE_TAG)
            .chain_update((m as u32).to_be_bytes())
            .chain_update(block.to_be_bytes())
            .chain_update(input)
            .finalize();
        out.extend_from_slice(&h);
        block += 1;
    }
    out.truncate(nbytes);
    if !m.is_multiple_of(8) {
        out[0] &= (1u8 << (m % 8)) - 1;
    }
    BitString::from_bytes(m, out).expect("padding bits cleared")
}
