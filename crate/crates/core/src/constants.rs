//! Analytic densities of k-free numbers: the walk constant θ_k(a, b, r),
//! the progression density β_k(q, r), 1/ζ(k), and the finite sums f(i) and
//! M_k(n, u, v) that approximate the walk's hit probabilities.

use serde::Serialize;

use crate::arith::{
    check_k, check_size, checked_pow, gcd_raw, iroot, is_kfree, mobius_sieve, prime_factors,
    primes_up_to, SieveTable,
};
use crate::error::{Error, Result};
use crate::stats::CompensatedSum;

/// Default prime cutoff for Euler products.
pub const DEFAULT_PRIME_LIMIT: u64 = 100_000;

/// Parameters of an α-random walk: start at `r`, step `+a` with probability
/// `alpha` and `+b` otherwise, and test positions for k-freeness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkParams {
    pub k: u32,
    pub a: u64,
    pub b: u64,
    pub r: u64,
    pub alpha: f64,
}

impl WalkParams {
    pub fn new(k: u32, a: u64, b: u64, r: u64, alpha: f64) -> Result<Self> {
        let p = WalkParams { k, a, b, r, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_k(self.k)?;
        if self.a == 0 {
            return Err(Error::param("a", "a must be at least 1"));
        }
        if self.b == 0 {
            return Err(Error::param("b", "b must be at least 1"));
        }
        if self.a == self.b {
            return Err(Error::param("b", "a must differ from b"));
        }
        for (field, v) in [("a", self.a), ("b", self.b), ("r", self.r)] {
            if v > crate::arith::MAX_INPUT {
                return Err(Error::param(field, format!("{v} exceeds 2^62")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param("alpha", "alpha must lie in (0,1)"));
        }
        Ok(())
    }

    /// The same walk with the step labels swapped so that the first step is
    /// the larger one. Swapping the steps also swaps their probabilities.
    pub fn normalized(&self) -> WalkParams {
        if self.a > self.b {
            *self
        } else {
            WalkParams {
                a: self.b,
                b: self.a,
                alpha: 1.0 - self.alpha,
                ..*self
            }
        }
    }

    /// Position after `n` steps of which `l` were `a`-steps.
    #[inline]
    pub fn position(&self, n: u64, l: u64) -> u64 {
        self.r + l * self.a + (n - l) * self.b
    }

    /// Largest position reachable in `n` steps.
    pub fn max_position(&self, n: u64) -> Result<u64> {
        let top = self
            .a
            .max(self.b)
            .checked_mul(n)
            .and_then(|x| x.checked_add(self.r))
            .ok_or(Error::TooLarge { value: u64::MAX })?;
        check_size(top)?;
        Ok(top)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensityKind {
    Theta { k: u32, a: u64, b: u64, r: u64 },
    Beta { k: u32, q: u64, r: u64 },
    OneOverZeta { k: u32 },
}

/// A limiting proportion with a certified truncation bound: the exact value
/// lies in `[value - tail_bound, value + tail_bound]`, a sub-interval of
/// `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityConstant {
    pub value: f64,
    pub tail_bound: f64,
    pub kind: DensityKind,
}

impl DensityConstant {
    pub fn contains(&self, x: f64) -> bool {
        (x - self.value).abs() <= self.tail_bound
    }
}

/// `Σ_{n > limit} n^-k <= limit^(1-k) / (k-1)`.
fn power_tail(limit: u64, k: u32) -> f64 {
    (limit as f64).powf(1.0 - k as f64) / (k - 1) as f64
}

/// Exponent of `p` in `n`.
fn valuation(mut n: u64, p: u64) -> u32 {
    let mut e = 0;
    while n != 0 && n.is_multiple_of(p) {
        n /= p;
        e += 1;
    }
    e
}

/// Truncated Euler product `Π_{p <= limit} local(p)` where `local(p)` is
/// `1 - p^-(k - e)` with `e = min(k, v_p(g))`, or 1 when `p^e ∤ r`.
/// Primes of `g` above the limit are multiplied in exactly. Every other
/// prime above the limit has local factor `1 - p^-k`, so the exact product
/// lies in `[P (1 - T), P]` with `T` the power tail; the returned value is
/// the midpoint of that interval.
fn euler_product(k: u32, g: u64, r: u64, prime_limit: u64) -> (f64, f64) {
    let local = |p: u64| -> f64 {
        let e = valuation(g, p).min(k);
        let pe = checked_pow(p, e);
        let admissible = match (r, pe) {
            (0, _) => true,
            (_, Some(pe)) => r.is_multiple_of(pe),
            // p^e > 2^64 > r
            (_, None) => false,
        };
        if !admissible {
            return 0.0;
        }
        // ln(1 - p^e / p^k)
        (-(p as f64).powi(-((k - e) as i32))).ln_1p()
    };
    let mut log_sum = CompensatedSum::new();
    let large = if g > 1 { prime_factors(g) } else { Vec::new() };
    let primes = primes_up_to(prime_limit);
    let all = primes
        .iter()
        .chain(large.iter().filter(|&&p| p > prime_limit));
    for &p in all {
        let term = local(p);
        if term == f64::NEG_INFINITY {
            // a local factor of exactly zero
            return (0.0, 0.0);
        }
        log_sum.add(term);
    }
    let truncated = log_sum.value().exp();
    let tail = power_tail(prime_limit, k);
    let half = truncated * tail / 2.0;
    (truncated - half, half)
}

fn check_prime_limit(prime_limit: u64) -> Result<()> {
    if prime_limit < 2 {
        return Err(Error::param("prime_limit", "must be at least 2"));
    }
    if prime_limit > 1 << 32 {
        return Err(Error::param("prime_limit", "must not exceed 2^32"));
    }
    Ok(())
}

/// θ_k(a, b, r): the Euler product over primes `p` with `gcd(a, b, p^k) | r`
/// of `1 - gcd(a, b, p^k) / p^k`. Independent of `alpha` and symmetric in
/// `a`, `b`.
pub fn theta_k(p: &WalkParams, prime_limit: u64) -> Result<DensityConstant> {
    p.validate()?;
    check_prime_limit(prime_limit)?;
    let g = gcd_raw(p.a, p.b);
    let (value, tail_bound) = euler_product(p.k, g, p.r, prime_limit);
    Ok(DensityConstant {
        value,
        tail_bound,
        kind: DensityKind::Theta {
            k: p.k,
            a: p.a,
            b: p.b,
            r: p.r,
        },
    })
}

/// 1/ζ(k) as the Euler product `Π_p (1 - p^-k)`.
pub fn inv_zeta_k(k: u32, prime_limit: u64) -> Result<DensityConstant> {
    check_k(k)?;
    check_prime_limit(prime_limit)?;
    let (value, tail_bound) = euler_product(k, 1, 0, prime_limit);
    Ok(DensityConstant {
        value,
        tail_bound,
        kind: DensityKind::OneOverZeta { k },
    })
}

/// β_k(q, r), the density of k-free `n ≡ r (mod q)`; `g = gcd(r, q)` must
/// itself be k-free.
///
/// Computed as `1/(q ζ(k)) · Π_{p | q} (1 - p^-k)^-1 · Π (1 - p^(e - k))`,
/// the last product over primes with `e = v_p(q) = v_p(g)`. For `k = 2`, or
/// for `g = 1`, this equals `φ(q) / (g φ(q/g)) · 1/(q ζ(k)) · Π_{p | q}
/// (1 - p^-k)^-1`; for larger `k` that shortcut miscounts the primes where
/// `p^e` divides both `q` and `r`.
pub fn beta_k(k: u32, q: u64, r: u64, prime_limit: u64) -> Result<DensityConstant> {
    check_k(k)?;
    if q == 0 {
        return Err(Error::param("q", "q must be at least 1"));
    }
    if r >= q {
        return Err(Error::param(
            "r",
            format!("residue r must lie in [0, q-1], got r={r} q={q}"),
        ));
    }
    check_size(q)?;
    let g = gcd_raw(r, q);
    if !is_kfree(g, k) {
        return Err(Error::NotKFreeGcd { gcd: g, k });
    }
    let iz = inv_zeta_k(k, prime_limit)?;
    let kk = k.min(i32::MAX as u32) as i32;
    let mut coef = 1.0 / q as f64;
    for p in prime_factors(q) {
        let pf = p as f64;
        coef /= 1.0 - pf.powi(-kk);
        let e = valuation(q, p);
        if valuation(g, p) == e {
            // e < k because g is k-free
            coef *= 1.0 - pf.powi(e as i32 - kk);
        }
    }
    Ok(DensityConstant {
        value: coef * iz.value,
        tail_bound: coef * iz.tail_bound,
        kind: DensityKind::Beta { k, q, r },
    })
}

/// Evaluates `Σ_{d <= top^(1/k), gcd(u, d^k) | v} μ(d) gcd(u, d^k) / d^k`
/// from a shared Möbius table.
struct TruncatedSum {
    k: u32,
    mu: SieveTable,
}

impl TruncatedSum {
    /// Table good for every `top` up to `max_top`.
    fn new(k: u32, max_top: u64) -> Result<Self> {
        check_k(k)?;
        check_size(max_top)?;
        let mu = mobius_sieve(1, iroot(max_top, k).max(1))?;
        Ok(TruncatedSum { k, mu })
    }

    fn eval(&self, u: u64, v: u64, top: u64) -> f64 {
        let limit = iroot(top, self.k);
        debug_assert!(limit <= self.mu.hi());
        let mut sum = CompensatedSum::new();
        for d in 1..=limit {
            let m = self.mu.get(d).expect("Möbius table covers the range");
            if m == 0 {
                continue;
            }
            // d^k <= top <= 2^62
            let dk = checked_pow(d, self.k).expect("d^k <= top");
            let g = gcd_raw(u, dk);
            if !v.is_multiple_of(g) {
                continue;
            }
            sum.add(m as f64 * (g as f64 / dk as f64));
        }
        sum.value()
    }
}

fn affine_top(u: u64, n: u64, v: u64) -> Result<u64> {
    let top = u
        .checked_mul(n)
        .and_then(|x| x.checked_add(v))
        .ok_or(Error::TooLarge { value: u64::MAX })?;
    check_size(top)?;
    Ok(top)
}

/// M_k(n, u, v): the main term for the probability that `u m + v` is k-free
/// when `m` is binomially distributed on `[0, n]`.
pub fn m_k(n: u64, u: u64, v: u64, k: u32) -> Result<f64> {
    if n == 0 || u == 0 || v == 0 {
        return Err(Error::param("n, u, v", "must all be at least 1"));
    }
    let top = affine_top(u, n, v)?;
    Ok(TruncatedSum::new(k, top)?.eval(u, v, top))
}

/// f(i) = M_k(i, a - b, b i + r) with the steps ordered so that `a > b`.
pub fn f_of_i(p: &WalkParams, i: u64) -> Result<f64> {
    p.validate()?;
    if i == 0 {
        return Err(Error::param("i", "step index must be at least 1"));
    }
    let w = p.normalized();
    let top = w.max_position(i)?;
    Ok(TruncatedSum::new(w.k, top)?.eval(w.a - w.b, w.b * i + w.r, top))
}

/// Evaluates f(1), f(2), ... sharing one Möbius table.
pub struct FEvaluator {
    walk: WalkParams,
    sum: TruncatedSum,
    max_i: u64,
}

impl FEvaluator {
    pub fn new(p: &WalkParams, max_i: u64) -> Result<Self> {
        p.validate()?;
        let walk = p.normalized();
        let top = walk.max_position(max_i.max(1))?;
        Ok(FEvaluator {
            walk,
            sum: TruncatedSum::new(walk.k, top)?,
            max_i,
        })
    }

    pub fn eval(&self, i: u64) -> f64 {
        assert!(
            i >= 1 && i <= self.max_i,
            "i = {i} outside [1, {}]",
            self.max_i
        );
        let w = &self.walk;
        self.sum.eval(w.a - w.b, w.b * i + w.r, w.a * i + w.r)
    }
}

/// Partial sum of f against its predicted main term θ·N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanF {
    pub n: u64,
    pub sum: f64,
    pub predicted: f64,
    pub residual: f64,
    /// `residual / N^(1/k)`.
    pub scaled_residual: f64,
}

/// `Σ_{i <= N} f(i)` against `θ_k N`.
pub fn mean_f(p: &WalkParams, n: u64, prime_limit: u64) -> Result<MeanF> {
    Ok(mean_f_series(p, &[n], prime_limit)?[0])
}

/// [`mean_f`] at every `N` of a strictly increasing grid, in one pass.
pub fn mean_f_series(p: &WalkParams, ns: &[u64], prime_limit: u64) -> Result<Vec<MeanF>> {
    if ns.is_empty() {
        return Ok(Vec::new());
    }
    if ns[0] == 0 {
        return Err(Error::param("N", "must be at least 1"));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::GridNotIncreasing);
    }
    let theta = theta_k(p, prime_limit)?.value;
    let max_n = *ns.last().unwrap();
    let f = FEvaluator::new(p, max_n)?;
    let mut out = Vec::with_capacity(ns.len());
    let mut acc = CompensatedSum::new();
    let mut next = ns.iter().peekable();
    for i in 1..=max_n {
        acc.add(f.eval(i));
        if next.peek() == Some(&&i) {
            next.next();
            let sum = acc.value();
            let predicted = theta * i as f64;
            let residual = sum - predicted;
            out.push(MeanF {
                n: i,
                sum,
                predicted,
                residual,
                scaled_residual: residual / (i as f64).powf(1.0 / p.k as f64),
            });
        }
    }
    Ok(out)
}
