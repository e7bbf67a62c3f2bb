//! Classical baselines: Q_k(N), the number of k-free `n <= N`, and
//! Q_k(N; q, r), the same restricted to `n ≡ r (mod q)`, by a parallel
//! segmented sieve.

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::sieve::{kfree_segment, prime_powers};
use crate::arith::{check_k, check_size};
use crate::constants::{beta_k, inv_zeta_k, DEFAULT_PRIME_LIMIT};
use crate::error::{Error, Result};

/// Default counting segment length (flags per segment).
pub const DEFAULT_COUNT_SEGMENT: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountReport {
    #[serde(rename = "N")]
    pub n: u64,
    pub k: u32,
    pub q: u64,
    pub r: u64,
    pub count: u64,
    /// `count / N`
    pub density: f64,
    /// Limiting density, when the progression has one in closed form.
    pub predicted: Option<f64>,
    /// `density - predicted`
    pub residual: Option<f64>,
}

pub fn count_kfree(n: u64, k: u32) -> Result<CountReport> {
    count_kfree_ap_with(n, k, 1, 0, DEFAULT_COUNT_SEGMENT)
}

pub fn count_kfree_ap(n: u64, k: u32, q: u64, r: u64) -> Result<CountReport> {
    count_kfree_ap_with(n, k, q, r, DEFAULT_COUNT_SEGMENT)
}

/// k-free `m <= N` with `m ≡ r (mod q)`. Segments are sieved concurrently
/// and their counts summed in segment order.
pub fn count_kfree_ap_with(
    n: u64,
    k: u32,
    q: u64,
    r: u64,
    segment_len: usize,
) -> Result<CountReport> {
    check_k(k)?;
    if n == 0 {
        return Err(Error::param("N", "must be at least 1"));
    }
    check_size(n)?;
    if q == 0 {
        return Err(Error::param("q", "q must be at least 1"));
    }
    if r >= q {
        return Err(Error::param(
            "r",
            format!("residue r must lie in [0, q-1], got r={r} q={q}"),
        ));
    }
    if segment_len == 0 {
        return Err(Error::param("segment_len", "must be positive"));
    }

    let powers = prime_powers(n, k);
    let seg = segment_len as u64;
    let segments = n.div_ceil(seg);
    let counts: Vec<u64> = (0..segments)
        .into_par_iter()
        .map_init(
            || vec![0i8; segment_len],
            |buf, s| {
                let start = 1 + s * seg;
                let end = (start + seg - 1).min(n);
                let flags = &mut buf[..(end - start + 1) as usize];
                kfree_segment(start, &powers, flags);
                if q == 1 {
                    flags.iter().map(|&f| f as u64).sum()
                } else {
                    let first = start + (r + q - start % q) % q;
                    if first > end {
                        return 0;
                    }
                    flags[(first - start) as usize..]
                        .iter()
                        .step_by(q as usize)
                        .map(|&f| f as u64)
                        .sum()
                }
            },
        )
        .collect();
    let count: u64 = counts.iter().sum();
    let density = count as f64 / n as f64;

    let predicted = if q == 1 {
        Some(inv_zeta_k(k, DEFAULT_PRIME_LIMIT)?.value)
    } else {
        match beta_k(k, q, r, DEFAULT_PRIME_LIMIT) {
            Ok(b) => Some(b.value),
            Err(Error::NotKFreeGcd { .. }) => None,
            Err(e) => return Err(e),
        }
    };
    Ok(CountReport {
        n,
        k,
        q,
        r,
        count,
        density,
        predicted,
        residual: predicted.map(|p| density - p),
    })
}
