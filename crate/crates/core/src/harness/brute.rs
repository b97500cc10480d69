//! Exhaustive search over toy-size domains.

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::hash_family::{FamilyKey, TOY_MAX_BITS};

fn check_domain(n: usize) -> Result<()> {
    if n > TOY_MAX_BITS {
        return Err(Error::DomainTooLarge {
            bits: n,
            max: TOY_MAX_BITS,
        });
    }
    Ok(())
}

/// Returns some `x` with `f_k(x) = y`, scanning all `2^n` inputs in order.
pub fn brute_force_ow(key: &FamilyKey, y: &BitString) -> Result<Option<BitString>> {
    check_domain(key.n())?;
    key.check_len(y)?;
    let n = key.n();
    Ok((0..1u64 << n)
        .map(|v| BitString::from_u64(n, v))
        .find(|x| key.apply(x) == *y))
}

/// Returns some `x' != x` with `f_k(x') = f_k(x)`.
pub fn brute_force_spr(key: &FamilyKey, x: &BitString) -> Result<Option<BitString>> {
    check_domain(key.n())?;
    key.check_len(x)?;
    let n = key.n();
    let target = key.apply(x);
    Ok((0..1u64 << n)
        .map(|v| BitString::from_u64(n, v))
        .find(|c| c != x && key.apply(c) == target))
}

/// The complete graph of `f_k` on a toy domain, with an inverse index.
#[derive(Debug, Clone)]
pub struct FunctionTable {
    n: usize,
    images: Vec<u32>,
    // preimages of y are sorted_inputs[offsets[y] .. offsets[y + 1]]
    offsets: Vec<u32>,
    sorted_inputs: Vec<u32>,
}

impl FunctionTable {
    /// Evaluates `f_k` on all `2^n` inputs.
    pub fn build(key: &FamilyKey) -> Result<Self> {
        check_domain(key.n())?;
        let n = key.n();
        let size = 1usize << n;
        let images: Vec<u32> = (0..size as u64)
            .map(|v| key.apply(&BitString::from_u64(n, v)).to_u64().unwrap() as u32)
            .collect();
        let mut offsets = vec![0u32; size + 1];
        for y in &images {
            offsets[*y as usize + 1] += 1;
        }
        for i in 0..size {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut sorted_inputs = vec![0u32; size];
        for (x, y) in images.iter().enumerate() {
            sorted_inputs[fill[*y as usize] as usize] = x as u32;
            fill[*y as usize] += 1;
        }
        Ok(Self {
            n,
            images,
            offsets,
            sorted_inputs,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain_size(&self) -> u64 {
        1u64 << self.n
    }

    pub fn image(&self, x: u32) -> u32 {
        self.images[x as usize]
    }

    pub fn preimages(&self, y: u32) -> &[u32] {
        let (a, b) = (self.offsets[y as usize], self.offsets[y as usize + 1]);
        &self.sorted_inputs[a as usize..b as usize]
    }

    pub fn distinct_images(&self) -> usize {
        self.offsets.windows(2).filter(|w| w[1] > w[0]).count()
    }

    /// Fraction of inputs that share their image with some other input.
    pub fn second_preimage_fraction(&self) -> f64 {
        let with = self
            .images
            .iter()
            .filter(|y| self.preimages(**y).len() > 1)
            .count();
        with as f64 / self.domain_size() as f64
    }

    /// Total variation distance between a uniform `u` and `u = f_k(x)` for
    /// uniform `x`. This caps the advantage of any distinguisher for this key,
    /// whatever its running time.
    pub fn uniform_vs_image_distance(&self) -> f64 {
        let size = self.domain_size() as f64;
        let sum: f64 = self
            .offsets
            .windows(2)
            .map(|w| ((w[1] - w[0]) as f64 - 1.0).abs())
            .sum();
        sum / (2.0 * size)
    }
}
