use std::sync::OnceLock;

use crate::arith::sieve::{kfree_segment, prime_powers};
use crate::arith::{check_k, check_size};
use crate::error::{Error, Result};

/// Default segment length of the simulation cache, as a power of two.
pub const DEFAULT_SEGMENT_BITS: u32 = 16;

/// k-free flags on `[0, limit]`, sieved one segment at a time on first use.
///
/// Segments are built at most once (concurrent first readers block on the
/// same build) and never change afterwards, so the cache can be shared by
/// any number of simulating threads.
pub struct KfreeCache {
    k: u32,
    limit: u64,
    segment_bits: u32,
    powers: Vec<u64>,
    segments: Vec<OnceLock<Box<[i8]>>>,
}

impl KfreeCache {
    pub fn new(k: u32, limit: u64) -> Result<Self> {
        Self::with_segment_bits(k, limit, DEFAULT_SEGMENT_BITS)
    }

    pub fn with_segment_bits(k: u32, limit: u64, segment_bits: u32) -> Result<Self> {
        check_k(k)?;
        check_size(limit)?;
        if !(4..=30).contains(&segment_bits) {
            return Err(Error::param("segment_bits", "must lie in [4, 30]"));
        }
        let count = (limit >> segment_bits) as usize + 1;
        Ok(KfreeCache {
            k,
            limit,
            segment_bits,
            powers: prime_powers(limit.max(1), k),
            segments: (0..count).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn segment_bits(&self) -> u32 {
        self.segment_bits
    }

    /// Flags for `[idx << bits, (idx + 1) << bits)`; entry 0 of segment 0
    /// stands for the integer 0 and is meaningless.
    #[inline]
    pub fn segment(&self, idx: usize) -> &[i8] {
        self.segments[idx].get_or_init(|| {
            let start = (idx as u64) << self.segment_bits;
            let mut buf = vec![0i8; 1 << self.segment_bits].into_boxed_slice();
            kfree_segment(start, &self.powers, &mut buf);
            buf
        })
    }

    /// Number of segments built so far.
    pub fn built_segments(&self) -> usize {
        self.segments.iter().filter(|s| s.get().is_some()).count()
    }

    pub fn is_kfree(&self, n: u64) -> bool {
        assert!(n >= 1 && n <= self.limit, "{n} outside [1, {}]", self.limit);
        let idx = (n >> self.segment_bits) as usize;
        let off = (n & ((1 << self.segment_bits) - 1)) as usize;
        self.segment(idx)[off] != 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::is_kfree;

    #[test]
    fn matches_trial_division() {
        let cache = KfreeCache::with_segment_bits(3, 5_000, 6).unwrap();
        assert_eq!(cache.built_segments(), 0);
        for n in 1..=5_000 {
            assert_eq!(cache.is_kfree(n), is_kfree(n, 3), "n={n}");
        }
        assert_eq!(cache.built_segments(), (5_000 >> 6) + 1);
    }

    #[test]
    fn lazily_built() {
        let cache = KfreeCache::new(2, 1_000_000).unwrap();
        assert!(!cache.is_kfree(999_999 - 999_999 % 4));
        assert_eq!(cache.built_segments(), 1);
    }

    #[test]
    fn concurrent_readers_agree() {
        let cache = KfreeCache::with_segment_bits(2, 200_000, 8).unwrap();
        let counts: Vec<usize> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..4)
                .map(|_| s.spawn(|| (1..=200_000).filter(|&n| cache.is_kfree(n)).count()))
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        assert!(counts.windows(2).all(|w| w[0] == w[1]));
        // Q_2(200000)
        let direct = (1..=200_000u64).filter(|&n| is_kfree(n, 2)).count();
        assert_eq!(counts[0], direct);
    }
}
