use serde::Serialize;

use super::{check_k, check_size, checked_pow, iroot, primes_up_to};
use crate::error::{Error, Result};

/// Default number of entries per sieve segment.
pub const DEFAULT_SEGMENT_LEN: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SieveKind {
    Mobius,
    Kfree { k: u32 },
}

/// A table of Möbius values or k-free flags over the closed interval
/// `[lo, hi]`. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SieveTable {
    lo: u64,
    hi: u64,
    kind: SieveKind,
    values: Vec<i8>,
}

impl SieveTable {
    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn kind(&self) -> SieveKind {
        self.kind
    }

    /// Values indexed by `n - lo`.
    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at `n`, or `None` outside `[lo, hi]`.
    #[inline]
    pub fn get(&self, n: u64) -> Option<i8> {
        if n < self.lo || n > self.hi {
            return None;
        }
        Some(self.values[(n - self.lo) as usize])
    }

    /// Whether `n` is k-free, for a k-free table. Panics outside the range.
    #[inline]
    pub fn is_kfree(&self, n: u64) -> bool {
        debug_assert!(matches!(self.kind, SieveKind::Kfree { .. }));
        self.values[(n - self.lo) as usize] != 0
    }

    pub(crate) fn values_mut(&mut self) -> &mut [i8] {
        &mut self.values
    }
}

fn check_interval(lo: u64, hi: u64) -> Result<()> {
    if lo == 0 {
        return Err(Error::ZeroLowerBound(lo));
    }
    if hi < lo {
        return Err(Error::EmptyInterval { lo, hi });
    }
    check_size(hi)
}

fn check_segment_len(segment_len: usize) -> Result<()> {
    if segment_len == 0 {
        return Err(Error::param("segment_len", "must be positive"));
    }
    Ok(())
}

/// Möbius values on `[lo, hi]` with the default segment length.
pub fn mobius_sieve(lo: u64, hi: u64) -> Result<SieveTable> {
    mobius_sieve_with(lo, hi, DEFAULT_SEGMENT_LEN)
}

pub fn mobius_sieve_with(lo: u64, hi: u64, segment_len: usize) -> Result<SieveTable> {
    check_interval(lo, hi)?;
    check_segment_len(segment_len)?;
    let primes = primes_up_to(iroot(hi, 2));
    let len = (hi - lo + 1) as usize;
    let mut values = vec![0i8; len];
    let mut rem = vec![0u64; segment_len.min(len)];
    for (seg_idx, chunk) in values.chunks_mut(segment_len).enumerate() {
        let start = lo + (seg_idx * segment_len) as u64;
        mobius_segment(start, &primes, chunk, &mut rem[..chunk.len()]);
    }
    Ok(SieveTable {
        lo,
        hi,
        kind: SieveKind::Mobius,
        values,
    })
}

/// Fill `out[i] = μ(start + i)`. `primes` must cover every prime up to the
/// square root of the last entry.
fn mobius_segment(start: u64, primes: &[u64], out: &mut [i8], rem: &mut [u64]) {
    let end = start + out.len() as u64 - 1;
    out.fill(1);
    for (i, r) in rem.iter_mut().enumerate() {
        *r = start + i as u64;
    }
    for &p in primes {
        let p2 = p * p;
        if p2 > end {
            break;
        }
        let mut m = start.div_ceil(p) * p;
        while m <= end {
            let i = (m - start) as usize;
            out[i] = -out[i];
            rem[i] /= p;
            m += p;
        }
        let mut m = start.div_ceil(p2) * p2;
        while m <= end {
            out[(m - start) as usize] = 0;
            m += p2;
        }
    }
    // At most one prime factor above sqrt(end) survives.
    for (v, &r) in out.iter_mut().zip(rem.iter()) {
        if r > 1 {
            *v = -*v;
        }
    }
}

/// k-free flags on `[lo, hi]` with the default segment length.
pub fn kfree_sieve(lo: u64, hi: u64, k: u32) -> Result<SieveTable> {
    kfree_sieve_with(lo, hi, k, DEFAULT_SEGMENT_LEN)
}

pub fn kfree_sieve_with(lo: u64, hi: u64, k: u32, segment_len: usize) -> Result<SieveTable> {
    check_k(k)?;
    check_interval(lo, hi)?;
    check_segment_len(segment_len)?;
    let powers = prime_powers(hi, k);
    let len = (hi - lo + 1) as usize;
    let mut values = vec![0i8; len];
    for (seg_idx, chunk) in values.chunks_mut(segment_len).enumerate() {
        let start = lo + (seg_idx * segment_len) as u64;
        kfree_segment(start, &powers, chunk);
    }
    Ok(SieveTable {
        lo,
        hi,
        kind: SieveKind::Kfree { k },
        values,
    })
}

/// `p^k` for every prime with `p^k <= limit`.
pub(crate) fn prime_powers(limit: u64, k: u32) -> Vec<u64> {
    primes_up_to(iroot(limit, k))
        .into_iter()
        .filter_map(|p| checked_pow(p, k))
        .collect()
}

/// Fill `out[i]` with the k-free flag of `start + i`, given every `p^k` up to
/// the last entry.
pub(crate) fn kfree_segment(start: u64, powers: &[u64], out: &mut [i8]) {
    let end = start + out.len() as u64 - 1;
    out.fill(1);
    for &q in powers {
        if q > end {
            break;
        }
        let mut m = start.div_ceil(q) * q;
        while m <= end {
            out[(m - start) as usize] = 0;
            m += q;
        }
    }
}
