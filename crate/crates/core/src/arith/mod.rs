//! Number-theoretic primitives: gcd, integer roots, the Möbius function,
//! k-free tests, segmented sieves and truncated ζ(k).
//!
//! All integers are `u64`; values above [`MAX_INPUT`] are rejected so that
//! prime powers `p^k <= n` can be formed without overflow.

pub(crate) mod sieve;
mod zeta;

pub use sieve::{
    kfree_sieve, kfree_sieve_with, mobius_sieve, mobius_sieve_with, SieveKind, SieveTable,
    DEFAULT_SEGMENT_LEN,
};
pub use zeta::{zeta_k, CertifiedValue};

use crate::error::{Error, Result};

/// Largest integer accepted by sieves and k-free tests.
pub const MAX_INPUT: u64 = 1 << 62;

/// Greatest common divisor. `gcd(0, n) = n`; `gcd(0, 0)` is an error.
pub fn gcd(m: u64, n: u64) -> Result<u64> {
    if m == 0 && n == 0 {
        return Err(Error::GcdOfZeros);
    }
    Ok(gcd_raw(m, n))
}

/// Euclid without the domain check; `gcd_raw(0, 0) == 0`.
#[inline]
pub(crate) fn gcd_raw(mut m: u64, mut n: u64) -> u64 {
    while n != 0 {
        let t = m % n;
        m = n;
        n = t;
    }
    m
}

pub(crate) fn check_k(k: u32) -> Result<()> {
    if k < 2 {
        Err(Error::KTooSmall(k))
    } else {
        Ok(())
    }
}

pub(crate) fn check_size(value: u64) -> Result<()> {
    if value > MAX_INPUT {
        Err(Error::TooLarge { value })
    } else {
        Ok(())
    }
}

/// `base^exp`, or `None` on overflow.
#[inline]
pub fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    base.checked_pow(exp)
}

/// `floor(n^(1/k))` computed with integer Newton iteration.
pub fn iroot(n: u64, k: u32) -> u64 {
    assert!(k >= 1, "iroot needs k >= 1");
    if n < 2 || k == 1 {
        return n;
    }
    let fits = |x: u64| checked_pow(x, k).is_some_and(|p| p <= n);
    // Seed from the float root, then settle exactly.
    let mut x = (n as f64).powf(1.0 / k as f64) as u64;
    if x == 0 {
        x = 1;
    }
    // Newton from above converges monotonically for an over-estimate.
    let mut hi = x + 1;
    while fits(hi) {
        hi *= 2;
    }
    let (n128, k128) = (n as u128, k as u128);
    loop {
        // y = ((k-1) x + n / x^(k-1)) / k
        let pow = checked_pow(hi, k - 1).map_or(u128::MAX, |p| p as u128);
        let y = (((k128 - 1) * hi as u128 + n128 / pow) / k128) as u64;
        if y >= hi {
            break;
        }
        hi = y;
    }
    let mut r = hi;
    while !fits(r) {
        r -= 1;
    }
    while fits(r + 1) {
        r += 1;
    }
    r
}

/// Primes `<= limit` by a plain sieve of Eratosthenes.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let limit = limit as usize;
    let mut composite = vec![false; limit + 1];
    let mut primes = Vec::new();
    for i in 2..=limit {
        if composite[i] {
            continue;
        }
        primes.push(i as u64);
        let mut j = i.saturating_mul(i);
        while j <= limit {
            composite[j] = true;
            j += i;
        }
    }
    primes
}

/// Distinct prime factors by trial division (oracle scale only).
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Euler's totient by trial division.
pub fn totient(n: u64) -> u64 {
    prime_factors(n)
        .into_iter()
        .fold(n, |acc, p| acc / p * (p - 1))
}

/// k-free test by trial division: true iff no prime `p` has `p^k | n`.
pub fn is_kfree(n: u64, k: u32) -> bool {
    assert!(n >= 1, "k-freeness is defined for n >= 1");
    let mut n = n;
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            if e >= k {
                return false;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    // a leftover prime has exponent 1 < k
    true
}

/// Möbius function by trial division.
pub fn mobius(n: u64) -> i8 {
    assert!(n >= 1, "μ is defined for n >= 1");
    let mut n = n;
    let mut sign = 1i8;
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            sign = -sign;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gcd_examples() {
        assert_eq!(gcd(4, 6), Ok(2));
        assert_eq!(gcd(0, 7), Ok(7));
        assert_eq!(gcd(7, 0), Ok(7));
        // gcd(a - b, d^k) with a = 4, b = 2, d = 2, k = 3
        assert_eq!(gcd(4 - 2, 2u64.pow(3)), Ok(2));
        assert_eq!(gcd(0, 0), Err(Error::GcdOfZeros));
    }

    #[test]
    fn iroot_at_perfect_powers() {
        assert_eq!(iroot(0, 3), 0);
        assert_eq!(iroot(1, 3), 1);
        assert_eq!(iroot(7, 3), 1);
        assert_eq!(iroot(8, 3), 2);
        assert_eq!(iroot(26, 3), 2);
        assert_eq!(iroot(27, 3), 3);
        assert_eq!(iroot(203, 3), 5);
        assert_eq!(iroot(1_000_000, 2), 1000);
        assert_eq!(iroot(999_999, 2), 999);
        assert_eq!(iroot(MAX_INPUT, 2), 1 << 31);
        assert_eq!(iroot(MAX_INPUT - 1, 2), (1 << 31) - 1);
        assert_eq!(iroot(u64::MAX, 2), u32::MAX as u64);
        assert_eq!(iroot(u64::MAX, 64), 1);
        assert_eq!(iroot(1u64 << 63, 63), 2);
    }

    #[test]
    fn trial_division_helpers() {
        assert_eq!(mobius(1), 1);
        assert_eq!(mobius(6), 1);
        assert_eq!(mobius(12), 0);
        assert_eq!(mobius(30), -1);
        assert!(!is_kfree(24, 3));
        assert!(is_kfree(36, 3));
        assert!(!is_kfree(36, 2));
        assert_eq!(totient(1), 1);
        assert_eq!(totient(4), 2);
        assert_eq!(totient(36), 12);
        assert_eq!(prime_factors(360), vec![2, 3, 5]);
        assert_eq!(primes_up_to(30), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
    }

    #[test]
    fn mu_k_identity_small() {
        // μ_k(n) = Σ_{d^k | n} μ(d)
        for k in 2..=4u32 {
            for n in 1..=10_000u64 {
                let mut s = 0i64;
                let mut d = 1u64;
                while let Some(dk) = checked_pow(d, k).filter(|&dk| dk <= n) {
                    if n % dk == 0 {
                        s += mobius(d) as i64;
                    }
                    d += 1;
                }
                assert_eq!(s, is_kfree(n, k) as i64, "n={n} k={k}");
            }
        }
    }

    proptest! {
        #[test]
        fn iroot_brackets(n in 0u64..MAX_INPUT, k in 2u32..8) {
            let r = iroot(n, k);
            prop_assert!(checked_pow(r, k).unwrap() <= n);
            prop_assert!(checked_pow(r + 1, k).is_none_or(|p| p > n));
        }

        #[test]
        fn gcd_divides_both(m in 0u64..1_000_000, n in 1u64..1_000_000) {
            let g = gcd(m, n).unwrap();
            prop_assert_eq!(m % g, 0);
            prop_assert_eq!(n % g, 0);
            prop_assert_eq!(gcd(m / g, n / g).unwrap(), 1);
        }
    }
}
