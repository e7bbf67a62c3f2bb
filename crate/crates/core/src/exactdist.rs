//! Exact (non-random) evaluation of the walk's hit statistics.
//!
//! After `n` steps the number of `a`-steps is Binomial(n, α), so every hit
//! probability is a binomial sum restricted to the step counts that land on
//! a k-free position. [`exact_moments`] assembles E and V of the hit
//! fraction from those sums; [`oracle_full_paths`] recomputes the same
//! quantities by enumerating every jump sequence.

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{is_kfree, kfree_sieve, SieveTable};
use crate::constants::{m_k, FEvaluator, WalkParams};
use crate::error::{Error, Result};
use crate::stats::{compensated_sum, CompensatedSum};

/// Default largest N for which [`exact_moments`] computes the variance.
pub const DEFAULT_PAIR_CAP: u64 = 3000;

/// Largest N accepted by [`oracle_full_paths`].
pub const ORACLE_MAX_N: u64 = 20;

/// Computed variances down to this much below zero are rounding noise.
pub const NEGATIVE_VARIANCE_TOLERANCE: f64 = 1e-10;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::param("alpha", "alpha must lie in (0,1)"))
    }
}

/// Binomial(n, α) probabilities `C(n, l) α^l (1-α)^(n-l)`, `l = 0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinomialPmf {
    pub n: u64,
    pub alpha: f64,
    pub weights: Vec<f64>,
}

/// Weights by the ratio recurrence outward from the mode, renormalized to
/// sum to one. Tail entries below the smallest subnormal are zero.
pub fn binom_pmf(n: u64, alpha: f64) -> Result<BinomialPmf> {
    check_alpha(alpha)?;
    let len = usize::try_from(n)
        .ok()
        .and_then(|n| n.checked_add(1))
        .ok_or(Error::TooLarge { value: n })?;
    let mut w = vec![0.0f64; len];
    let mode = (((n + 1) as f64 * alpha).floor() as u64).min(n) as usize;
    let up = alpha / (1.0 - alpha);
    let down = (1.0 - alpha) / alpha;
    let nf = n as f64;
    w[mode] = 1.0;
    for l in mode + 1..len {
        // w[l] / w[l-1] = (n - l + 1) / l * α / (1-α)
        w[l] = w[l - 1] * ((nf - l as f64 + 1.0) / l as f64) * up;
        if w[l] == 0.0 {
            break;
        }
    }
    for l in (0..mode).rev() {
        // w[l] / w[l+1] = (l + 1) / (n - l) * (1-α) / α
        w[l] = w[l + 1] * ((l as f64 + 1.0) / (nf - l as f64)) * down;
        if w[l] == 0.0 {
            break;
        }
    }
    let total = compensated_sum(w.iter().copied());
    for x in &mut w {
        *x /= total;
    }
    Ok(BinomialPmf {
        n,
        alpha,
        weights: w,
    })
}

impl BinomialPmf {
    /// Probability mass on `l ≡ c (mod d)`.
    pub fn congruence_mass(&self, d: u64, c: i64) -> f64 {
        assert!(d >= 1, "modulus must be positive");
        let start = c.rem_euclid(d as i64) as usize;
        compensated_sum(self.weights.iter().skip(start).step_by(d as usize).copied())
    }
}

/// An exact restricted binomial sum next to its main-term approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SumVsMain {
    pub exact: f64,
    pub main: f64,
    /// `exact - main`
    pub error: f64,
}

impl SumVsMain {
    fn new(exact: f64, main: f64) -> Self {
        SumVsMain {
            exact,
            main,
            error: exact - main,
        }
    }
}

/// `Σ_{l ≡ c (mod d)} C(n, l) α^l (1-α)^(n-l)` against `1/d`.
pub fn binom_congruence_sum(n: u64, d: u64, c: i64, alpha: f64) -> Result<SumVsMain> {
    if n == 0 || d == 0 {
        return Err(Error::param("n, d", "must be at least 1"));
    }
    let pmf = binom_pmf(n, alpha)?;
    Ok(SumVsMain::new(pmf.congruence_mass(d, c), 1.0 / d as f64))
}

/// `Σ_{u m + v k-free} C(n, m) α^m (1-α)^(n-m)` against `M_k(n, u, v)`.
pub fn kfree_binom_sum(n: u64, u: u64, v: u64, k: u32, alpha: f64) -> Result<SumVsMain> {
    if n == 0 || u == 0 || v == 0 {
        return Err(Error::param("n, u, v", "must all be at least 1"));
    }
    let main = m_k(n, u, v, k)?;
    let pmf = binom_pmf(n, alpha)?;
    // m_k has already range-checked u n + v
    let table = kfree_sieve(v, u * n + v, k)?;
    let exact = kfree_mass(&pmf.weights, &table, |m| u * m + v);
    Ok(SumVsMain::new(exact, main))
}

/// Mass of `weights[m]` over the `m` whose image is flagged k-free,
/// clamped to `[0, 1]` against rounding in the normalization.
fn kfree_mass(weights: &[f64], table: &SieveTable, pos: impl Fn(u64) -> u64) -> f64 {
    let mut s = CompensatedSum::new();
    for (m, &w) in weights.iter().enumerate() {
        if table.is_kfree(pos(m as u64)) {
            s.add(w);
        }
    }
    s.value().clamp(0.0, 1.0)
}

/// Sieve covering every position the walk can occupy at steps `lo_step..=hi_step`.
fn walk_sieve(w: &WalkParams, lo_step: u64, hi_step: u64) -> Result<SieveTable> {
    let lo = w.a.min(w.b) * lo_step + w.r;
    let hi = w.max_position(hi_step)?;
    kfree_sieve(lo.max(1), hi, w.k)
}

/// E(X_i) = P(P_i is k-free).
pub fn expect_xi(p: &WalkParams, i: u64) -> Result<f64> {
    p.validate()?;
    if i == 0 {
        return Err(Error::param("i", "step index must be at least 1"));
    }
    let w = p.normalized();
    w.max_position(i)?;
    Ok(kfree_binom_sum(i, w.a - w.b, w.b * i + w.r, w.k, w.alpha)?.exact)
}

/// E(X_i X_j) = P(P_i and P_j are both k-free), `i < j`, by the double
/// binomial sum over the `a`-step counts before `i` and between `i` and `j`.
/// Costs `O(i (j - i))`.
pub fn expect_xixj(p: &WalkParams, i: u64, j: u64) -> Result<f64> {
    p.validate()?;
    if i == 0 || j <= i {
        return Err(Error::param("i, j", "need 1 <= i < j"));
    }
    let w = p.normalized();
    let table = walk_sieve(&w, i, j)?;
    let first = binom_pmf(i, w.alpha)?;
    let second = binom_pmf(j - i, w.alpha)?;
    let u = w.a - w.b;
    let mut total = CompensatedSum::new();
    for (l, &wl) in first.weights.iter().enumerate() {
        let l = l as u64;
        if wl == 0.0 || !table.is_kfree(u * l + w.b * i + w.r) {
            continue;
        }
        let inner = kfree_mass(&second.weights, &table, |h| u * (l + h) + w.b * j + w.r);
        total.add(wl * inner);
    }
    Ok(total.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMethod {
    BinomialSum,
    FullPathEnumeration,
}

/// Exact hit probabilities and moments of the hit fraction over N steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactMoments {
    pub params: WalkParams,
    pub n: u64,
    /// `E(X_1), ..., E(X_N)`
    pub e_xi: Vec<f64>,
    pub e_sbar: f64,
    /// Variance, clamped at zero.
    pub v_sbar: Option<f64>,
    /// Variance before clamping.
    pub v_sbar_raw: Option<f64>,
    pub method: MomentMethod,
}

fn assemble_variance(n: u64, e_sbar: f64, second_moment_sum: f64) -> (f64, f64) {
    let nf = n as f64;
    let raw = second_moment_sum / (nf * nf) - e_sbar * e_sbar;
    if raw < -NEGATIVE_VARIANCE_TOLERANCE {
        log::warn!("computed variance {raw:e} is below -{NEGATIVE_VARIANCE_TOLERANCE:e}");
    } else if raw < 0.0 {
        log::debug!("clamping variance {raw:e} to zero");
    }
    (raw.max(0.0), raw)
}

/// E(S̄_N) and, optionally, V(S̄_N) from binomial sums.
///
/// The variance uses `E(X_i^2) = E(X_i)` on the diagonal and, for each `i`,
/// pushes the sub-probability vector `P(L_i = l, P_i k-free)` forward one
/// step at a time to read off every `E(X_i X_j)`, `j > i`. That is
/// `O(N^3)` work, hence `pair_cap`.
pub fn exact_moments(
    p: &WalkParams,
    n: u64,
    with_variance: bool,
    pair_cap: u64,
) -> Result<ExactMoments> {
    p.validate()?;
    if n == 0 {
        return Err(Error::param("N", "must be at least 1"));
    }
    if with_variance && n > pair_cap {
        return Err(Error::PairCapExceeded { n, cap: pair_cap });
    }
    let table = walk_sieve(p, 1, n)?;
    let hit = |step: u64, l: u64| table.is_kfree(p.position(step, l));

    let pmfs: Vec<BinomialPmf> = (1..=n)
        .into_par_iter()
        .map(|i| binom_pmf(i, p.alpha))
        .collect::<Result<_>>()?;
    let e_xi: Vec<f64> = pmfs
        .par_iter()
        .map(|pmf| kfree_mass(&pmf.weights, &table, |l| p.position(pmf.n, l)))
        .collect();
    let e_sbar = compensated_sum(e_xi.iter().copied()) / n as f64;

    let (v_sbar, v_sbar_raw) = if with_variance {
        let alpha = p.alpha;
        // Σ_{j > i} E(X_i X_j) for each i, in index order.
        let off_diag: Vec<f64> = pmfs
            .par_iter()
            .map(|pmf| {
                let i = pmf.n;
                let mut q: Vec<f64> = pmf
                    .weights
                    .iter()
                    .enumerate()
                    .map(|(l, &w)| if hit(i, l as u64) { w } else { 0.0 })
                    .collect();
                let mut acc = CompensatedSum::new();
                for j in i + 1..=n {
                    q.push(0.0);
                    for l in (1..q.len()).rev() {
                        q[l] = q[l] * (1.0 - alpha) + q[l - 1] * alpha;
                    }
                    q[0] *= 1.0 - alpha;
                    let mut s = CompensatedSum::new();
                    for (l, &x) in q.iter().enumerate() {
                        if x != 0.0 && hit(j, l as u64) {
                            s.add(x);
                        }
                    }
                    acc.add(s.value());
                }
                acc.value()
            })
            .collect();
        let pairs = compensated_sum(off_diag.iter().copied());
        let diag = compensated_sum(e_xi.iter().copied());
        let (v, raw) = assemble_variance(n, e_sbar, 2.0 * pairs + diag);
        (Some(v), Some(raw))
    } else {
        (None, None)
    };

    Ok(ExactMoments {
        params: *p,
        n,
        e_xi,
        e_sbar,
        v_sbar,
        v_sbar_raw,
        method: MomentMethod::BinomialSum,
    })
}

/// Ground truth by enumerating all `2^N` jump sequences, each weighted by
/// `α^(#a) (1-α)^(#b)`, with k-freeness decided by trial division.
pub fn oracle_full_paths(p: &WalkParams, n: u64) -> Result<ExactMoments> {
    p.validate()?;
    if n == 0 {
        return Err(Error::param("N", "must be at least 1"));
    }
    if n > ORACLE_MAX_N {
        return Err(Error::OracleTooLarge {
            n,
            max: ORACLE_MAX_N,
        });
    }
    let top = p.max_position(n)?;
    let lo = p.r + p.a.min(p.b);
    let kfree: Vec<bool> = (lo..=top).map(|v| is_kfree(v, p.k)).collect();
    let steps = n as usize;

    let mut e_xi = vec![CompensatedSum::new(); steps];
    let mut e_s = CompensatedSum::new();
    let mut e_s2 = CompensatedSum::new();
    for mask in 0u32..(1u32 << steps) {
        let mut pos = p.r;
        let mut weight = 1.0;
        let mut hits = 0u32;
        let mut xs = [false; ORACLE_MAX_N as usize];
        for (step, x) in xs.iter_mut().enumerate().take(steps) {
            if mask >> step & 1 == 1 {
                pos += p.a;
                weight *= p.alpha;
            } else {
                pos += p.b;
                weight *= 1.0 - p.alpha;
            }
            *x = kfree[(pos - lo) as usize];
            hits += *x as u32;
        }
        for (acc, &x) in e_xi.iter_mut().zip(&xs[..steps]) {
            if x {
                acc.add(weight);
            }
        }
        let s = hits as f64 / n as f64;
        e_s.add(weight * s);
        e_s2.add(weight * s * s);
    }
    let e_xi: Vec<f64> = e_xi.iter().map(|s| s.value()).collect();
    let e_sbar = e_s.value();
    let raw = e_s2.value() - e_sbar * e_sbar;
    Ok(ExactMoments {
        params: *p,
        n,
        e_xi,
        e_sbar,
        v_sbar: Some(raw.max(0.0)),
        v_sbar_raw: Some(raw),
        method: MomentMethod::FullPathEnumeration,
    })
}

/// `E(X_i)` against its main term `f(i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapRow {
    pub i: u64,
    pub e_xi: f64,
    pub f_i: f64,
    /// `e_xi - f_i`
    pub gap: f64,
    /// `|gap| · sqrt(α(1-α)) · i^(1/2 - 1/k)`; bounded in `i`.
    pub scaled_gap: f64,
}

pub fn gap_table(m: &ExactMoments) -> Result<Vec<GapRow>> {
    let p = &m.params;
    let f = FEvaluator::new(p, m.n)?;
    let spread = (p.alpha * (1.0 - p.alpha)).sqrt();
    let expo = 0.5 - 1.0 / p.k as f64;
    Ok(m.e_xi
        .iter()
        .zip(1..)
        .map(|(&e, i)| {
            let f_i = f.eval(i);
            let gap = e - f_i;
            GapRow {
                i,
                e_xi: e,
                f_i,
                gap,
                scaled_gap: gap.abs() * spread * (i as f64).powf(expo),
            }
        })
        .collect())
}
