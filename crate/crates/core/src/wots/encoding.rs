//! Canonical byte encodings.
//!
//! All three objects share a 16-byte header; integers are big-endian and
//! every node is `ceil(n / 8)` bytes in the form described on
//! [`BitString`](crate::BitString).
//!
//! ```text
//! offset  size  field
//!  0       4    magic "WOTS"
//!  4       1    version (1)
//!  5       1    kind: 1 secret key, 2 public key, 3 signature
//!  6       2    n
//!  8       4    m
//! 12       4    w
//! ```
//!
//! Body by kind:
//!
//! - secret key: `used` (1 byte, 0 or 1), key length (2), key, `w - 1` masks, `l` seeds
//! - public key: key length (2), key, `w - 1` masks, `l` chain ends
//! - signature: node count (4, must equal `l`), `l` nodes
//!
//! Trailing bytes are an error.

use super::{PublicKey, SecretKey, Signature};
use crate::bits::{byte_len, BitString};
use crate::error::{Error, Result};
use crate::hash_family::{BitmaskVector, FamilyKey};
use crate::params::{derive_params, Params};

pub const MAGIC: &[u8; 4] = b"WOTS";
pub const ENCODING_VERSION: u8 = 1;
pub const KIND_SECRET_KEY: u8 = 1;
pub const KIND_PUBLIC_KEY: u8 = 2;
pub const KIND_SIGNATURE: u8 = 3;

fn malformed(offset: usize, reason: impl Into<String>) -> Error {
    Error::MalformedEncoding {
        offset,
        reason: reason.into(),
    }
}

fn write_header(out: &mut Vec<u8>, kind: u8, p: &Params) {
    out.extend_from_slice(MAGIC);
    out.push(ENCODING_VERSION);
    out.push(kind);
    out.extend_from_slice(&(p.n() as u16).to_be_bytes());
    out.extend_from_slice(&(p.m() as u32).to_be_bytes());
    out.extend_from_slice(&p.w().to_be_bytes());
}

fn write_key_and_masks(out: &mut Vec<u8>, key: &FamilyKey, masks: &BitmaskVector) {
    out.extend_from_slice(&(key.as_bytes().len() as u16).to_be_bytes());
    out.extend_from_slice(key.as_bytes());
    for r in masks.iter() {
        out.extend_from_slice(r.as_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < len {
            return Err(malformed(
                self.pos,
                format!("truncated {what}: need {len} bytes, {} left", self.buf.len() - self.pos),
            ));
        }
        let s = &self.buf[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_be_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn header(&mut self, kind: u8) -> Result<Params> {
        if self.take(4, "magic")? != MAGIC {
            return Err(malformed(0, "bad magic"));
        }
        let version = self.u8("version")?;
        if version != ENCODING_VERSION {
            return Err(malformed(4, format!("unsupported version {version}")));
        }
        let got = self.u8("kind")?;
        if got != kind {
            return Err(malformed(5, format!("expected kind {kind}, found {got}")));
        }
        let n = self.u16("n")? as usize;
        let m = self.u32("m")? as usize;
        let w = self.u32("w")?;
        derive_params(n, m, w).map_err(|e| malformed(6, format!("bad parameters: {e}")))
    }

    fn node(&mut self, n: usize, what: &str) -> Result<BitString> {
        let at = self.pos;
        let bytes = self.take(byte_len(n), what)?.to_vec();
        BitString::from_bytes(n, bytes).map_err(|_| malformed(at, format!("padding bits set in {what}")))
    }

    fn nodes(&mut self, n: usize, count: usize, what: &str) -> Result<Vec<BitString>> {
        (0..count).map(|_| self.node(n, what)).collect()
    }

    fn key_and_masks(&mut self, p: &Params) -> Result<(FamilyKey, BitmaskVector)> {
        let at = self.pos;
        let len = self.u16("key length")? as usize;
        let spec = p.family();
        if len != spec.key_bytes() {
            return Err(malformed(at, format!("key length {len}, expected {}", spec.key_bytes())));
        }
        let key = FamilyKey::from_bytes(spec, self.take(len, "key")?.to_vec())?;
        let masks = BitmaskVector::from_masks(self.nodes(p.n(), p.chain_len(), "mask")?)?;
        Ok((key, masks))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(malformed(self.pos, format!("{} trailing bytes", self.buf.len() - self.pos)));
        }
        Ok(())
    }
}

impl SecretKey {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        write_header(&mut out, KIND_SECRET_KEY, &self.params);
        out.push(self.used as u8);
        write_key_and_masks(&mut out, &self.key, &self.masks);
        for s in &self.seeds {
            out.extend_from_slice(s.as_bytes());
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader { buf, pos: 0 };
        let params = r.header(KIND_SECRET_KEY)?;
        let at = r.pos;
        let used = match r.u8("used flag")? {
            0 => false,
            1 => true,
            v => return Err(malformed(at, format!("used flag {v}"))),
        };
        let (key, masks) = r.key_and_masks(&params)?;
        let seeds = r.nodes(params.n(), params.l(), "seed")?;
        r.finish()?;
        Ok(SecretKey::from_parts(params, key, masks, seeds, used))
    }
}

impl PublicKey {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        write_header(&mut out, KIND_PUBLIC_KEY, &self.params);
        write_key_and_masks(&mut out, &self.key, &self.masks);
        for e in &self.ends {
            out.extend_from_slice(e.as_bytes());
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader { buf, pos: 0 };
        let params = r.header(KIND_PUBLIC_KEY)?;
        let (key, masks) = r.key_and_masks(&params)?;
        let ends = r.nodes(params.n(), params.l(), "chain end")?;
        r.finish()?;
        Ok(PublicKey::from_parts(params, key, masks, ends))
    }
}

impl Signature {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        write_header(&mut out, KIND_SIGNATURE, &self.params);
        out.extend_from_slice(&(self.nodes.len() as u32).to_be_bytes());
        for x in &self.nodes {
            out.extend_from_slice(x.as_bytes());
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader { buf, pos: 0 };
        let params = r.header(KIND_SIGNATURE)?;
        let at = r.pos;
        let count = r.u32("node count")? as usize;
        if count != params.l() {
            return Err(malformed(at, format!("node count {count}, expected {}", params.l())));
        }
        let nodes = r.nodes(params.n(), count, "signature node")?;
        r.finish()?;
        Ok(Signature { params, nodes })
    }
}
