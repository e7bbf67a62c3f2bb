//! Self-check suite: sieve identities, oracle agreement, and the bounded
//! error statistics of the binomial-sum and mean-value approximations at
//! pinned desk-scale parameters.

use serde::Serialize;

use crate::arith::{
    checked_pow, is_kfree, kfree_sieve, kfree_sieve_with, mobius, mobius_sieve, zeta_k,
};
use crate::constants::{inv_zeta_k, mean_f_series, theta_k, WalkParams, DEFAULT_PRIME_LIMIT};
use crate::counting::{count_kfree, count_kfree_ap};
use crate::exactdist::{binom_pmf, exact_moments, kfree_binom_sum, oracle_full_paths};

/// Cap on `|exact - 1/d| · sqrt(α(1-α) n)` for congruence-restricted sums.
pub const CONGRUENCE_SUM_CAP: f64 = 2.0;
/// Cap on `|exact - M_k| · sqrt(α(1-α) n) / (u n + v)^(1/k)`.
pub const KFREE_SUM_CAP: f64 = 5.0;
/// Cap on `|Σ_{i<=N} f(i) - θ N| / N^(1/k)`.
pub const MEAN_F_CAP: f64 = 3.0;
/// Absolute agreement between binomial-sum moments and path enumeration.
pub const ORACLE_TOL: f64 = 1e-10;

pub const CONGRUENCE_MODULI: [u64; 4] = [2, 3, 5, 8];
pub const GRID_ALPHAS: [f64; 3] = [0.1, 0.5, 0.9];
pub const KFREE_SUM_SHIFTS: [(u64, u64); 3] = [(1, 1), (2, 5), (5, 3)];

/// Walks whose θ_k is known in closed form: 1/ζ(3), (12/13)/ζ(3), (8/7)/ζ(3).
pub fn theta_test_points() -> [WalkParams; 3] {
    [(2, 3, 0), (3, 6, 0), (4, 2, 1)].map(|(a, b, r)| WalkParams {
        k: 3,
        a,
        b,
        r,
        alpha: 0.5,
    })
}

/// The 24-point (k, a, b, r, α) grid used for oracle agreement.
pub fn oracle_grid() -> Vec<WalkParams> {
    let mut out = Vec::with_capacity(24);
    for k in [2, 3, 4] {
        for (a, b, r) in [(1, 2, 0), (2, 3, 1), (6, 3, 0), (4, 2, 1)] {
            for alpha in [0.25, 0.6] {
                out.push(WalkParams { k, a, b, r, alpha });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    /// Smaller grids; finishes in a few seconds.
    pub quick: bool,
    /// Flip one k-free flag before the sieve comparison. The suite must
    /// then fail; used to show the checks can fail at all.
    pub perturb_sieve: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub statistic: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub quick: bool,
    pub checks: Vec<CheckResult>,
    pub failures: usize,
}

fn check(name: &'static str, statistic: f64, threshold: f64, detail: String) -> CheckResult {
    CheckResult {
        name,
        pass: statistic <= threshold,
        statistic,
        threshold,
        detail,
    }
}

fn failed(name: &'static str, err: crate::Error) -> CheckResult {
    CheckResult {
        name,
        pass: false,
        statistic: f64::NAN,
        threshold: f64::NAN,
        detail: format!("error: {err}"),
    }
}

pub fn powers_of_two(lo: u32, hi: u32) -> Vec<u64> {
    (lo..=hi).map(|e| 1u64 << e).collect()
}

/// Max over the grid (and every residue `c`) of the congruence-sum statistic.
pub fn congruence_sum_statistic(ns: &[u64], moduli: &[u64], alphas: &[f64]) -> crate::Result<f64> {
    let mut worst: f64 = 0.0;
    for &n in ns {
        for &alpha in alphas {
            let pmf = binom_pmf(n, alpha)?;
            let scale = (alpha * (1.0 - alpha) * n as f64).sqrt();
            for &d in moduli {
                for c in 0..d as i64 {
                    let err = (pmf.congruence_mass(d, c) - 1.0 / d as f64).abs();
                    worst = worst.max(err * scale);
                }
            }
        }
    }
    Ok(worst)
}

/// Max over the grid of the k-free-sum statistic.
pub fn kfree_sum_statistic(
    ns: &[u64],
    shifts: &[(u64, u64)],
    ks: &[u32],
    alphas: &[f64],
) -> crate::Result<f64> {
    let mut worst: f64 = 0.0;
    for &n in ns {
        for &(u, v) in shifts {
            for &k in ks {
                for &alpha in alphas {
                    let s = kfree_binom_sum(n, u, v, k, alpha)?;
                    let top = (u * n + v) as f64;
                    let stat = s.error.abs() * (alpha * (1.0 - alpha) * n as f64).sqrt()
                        / top.powf(1.0 / k as f64);
                    worst = worst.max(stat);
                }
            }
        }
    }
    Ok(worst)
}

/// Max over the theta test points of `|Σ f(i) - θ N| / N^(1/k)`.
pub fn mean_f_statistic(ns: &[u64]) -> crate::Result<f64> {
    let mut worst: f64 = 0.0;
    for p in theta_test_points() {
        for m in mean_f_series(&p, ns, DEFAULT_PRIME_LIMIT)? {
            worst = worst.max(m.scaled_residual.abs());
        }
    }
    Ok(worst)
}

/// Largest absolute difference between binomial-sum moments and path
/// enumeration over `grid` and every `N <= max_n`.
pub fn oracle_discrepancy(grid: &[WalkParams], max_n: u64) -> crate::Result<f64> {
    let mut worst: f64 = 0.0;
    for p in grid {
        for n in 1..=max_n {
            let fast = exact_moments(p, n, true, n)?;
            let slow = oracle_full_paths(p, n)?;
            for (x, y) in fast.e_xi.iter().zip(&slow.e_xi) {
                worst = worst.max((x - y).abs());
            }
            worst = worst.max((fast.e_sbar - slow.e_sbar).abs());
            let (v1, v2) = (fast.v_sbar.unwrap(), slow.v_sbar.unwrap());
            worst = worst.max((v1 - v2).abs());
        }
    }
    Ok(worst)
}

fn sieve_check(opts: &VerifyOptions) -> crate::Result<CheckResult> {
    let hi = if opts.quick { 2_000 } else { 10_000 };
    let mut mismatches = 0u64;
    for k in 2..=4 {
        let mut t = kfree_sieve(1, hi, k)?;
        if opts.perturb_sieve && k == 3 {
            let v = &mut t.values_mut()[23];
            *v = 1 - *v;
        }
        mismatches += (1..=hi)
            .filter(|&n| t.is_kfree(n) != is_kfree(n, k))
            .count() as u64;
    }
    let mu = mobius_sieve(1, hi)?;
    mismatches += (1..=hi).filter(|&n| mu.get(n) != Some(mobius(n))).count() as u64;
    let lo = 1_000_000;
    let mu = mobius_sieve(lo, lo + 1_000)?;
    mismatches += (lo..=lo + 1_000)
        .filter(|&n| mu.get(n) != Some(mobius(n)))
        .count() as u64;
    Ok(check(
        "sieve_vs_trial_division",
        mismatches as f64,
        0.0,
        format!("k-free (k=2..4) and Möbius tables on [1,{hi}] and [10^6,10^6+1000]"),
    ))
}

fn mu_k_check(opts: &VerifyOptions) -> crate::Result<CheckResult> {
    let hi = if opts.quick { 2_000 } else { 10_000 };
    let mu = mobius_sieve(1, 100)?;
    let mut mismatches = 0u64;
    for k in 2..=3u32 {
        let t = kfree_sieve(1, hi, k)?;
        for n in 1..=hi {
            let mut s = 0i64;
            let mut d = 1u64;
            while let Some(dk) = checked_pow(d, k).filter(|&dk| dk <= n) {
                if n % dk == 0 {
                    s += mu.get(d).unwrap_or(0) as i64;
                }
                d += 1;
            }
            mismatches += (s != t.get(n).unwrap() as i64) as u64;
        }
    }
    Ok(check(
        "mu_k_identity",
        mismatches as f64,
        0.0,
        format!("Σ_(d^k | n) μ(d) equals the k-free flag for n <= {hi}, k = 2, 3"),
    ))
}

fn segment_check() -> crate::Result<CheckResult> {
    let mut mismatches = 0u64;
    for k in [2, 3] {
        let whole = kfree_sieve_with(1, 50_000, k, usize::MAX)?;
        for seg in [1_000, 777, 1 << 16] {
            let parts = kfree_sieve_with(1, 50_000, k, seg)?;
            mismatches += whole
                .values()
                .iter()
                .zip(parts.values())
                .filter(|(x, y)| x != y)
                .count() as u64;
        }
    }
    Ok(check(
        "segment_independence",
        mismatches as f64,
        0.0,
        "[1, 50000] sieved whole and in 1000/777/65536-entry segments".into(),
    ))
}

fn zeta_check() -> crate::Result<CheckResult> {
    let pi2_6 = std::f64::consts::PI.powi(2) / 6.0;
    let mut violations = 0u64;
    let mut prev = zeta_k(2, 1)?;
    for terms in [2, 10, 100, 1_000, 10_000, 100_000] {
        let z = zeta_k(2, terms)?;
        violations += (!z.contains(pi2_6)) as u64;
        violations += (z.lower() < prev.lower() - 1e-15 || z.upper() > prev.upper() + 1e-15) as u64;
        prev = z;
    }
    let z3 = zeta_k(3, 100_000)?;
    let iz = inv_zeta_k(3, DEFAULT_PRIME_LIMIT)?;
    // Dirichlet sum and Euler product must bracket the same number.
    let gap = (1.0 / z3.value - iz.value).abs();
    let slack = z3.tail_bound / (z3.value * z3.value) + iz.tail_bound + 1e-12;
    violations += (gap > slack) as u64;
    Ok(check(
        "zeta_intervals",
        violations as f64,
        0.0,
        "ζ(2) intervals nested and contain π²/6; 1/ζ(3) partial sum vs Euler product".into(),
    ))
}

fn theta_check() -> crate::Result<CheckResult> {
    let mut violations = 0u64;
    for p in theta_test_points() {
        let swapped = WalkParams {
            a: p.b,
            b: p.a,
            alpha: 0.9,
            ..p
        };
        let t1 = theta_k(&p, DEFAULT_PRIME_LIMIT)?;
        let t2 = theta_k(&swapped, DEFAULT_PRIME_LIMIT)?;
        violations += (t1.value.to_bits() != t2.value.to_bits()) as u64;
    }
    let t = theta_k(&theta_test_points()[0], DEFAULT_PRIME_LIMIT)?;
    let iz = inv_zeta_k(3, DEFAULT_PRIME_LIMIT)?;
    violations += ((t.value - iz.value).abs() > t.tail_bound + iz.tail_bound) as u64;
    Ok(check(
        "theta_invariance",
        violations as f64,
        0.0,
        "θ_k unchanged by a <-> b and α; gcd(a,b)=1 gives 1/ζ(k)".into(),
    ))
}

/// Runs every check. A check that errors counts as a failure.
pub fn run_suite(opts: &VerifyOptions) -> VerifyReport {
    let top_exp = if opts.quick { 12 } else { 16 };
    let ns = powers_of_two(6, top_exp);
    let mean_ns: &[u64] = if opts.quick {
        &[1_000, 10_000]
    } else {
        &[1_000, 10_000, 100_000]
    };
    let (oracle_points, oracle_n) = if opts.quick {
        (oracle_grid().into_iter().step_by(3).collect::<Vec<_>>(), 10)
    } else {
        (oracle_grid(), 14)
    };
    let count_n = if opts.quick { 10_000 } else { 100_000 };
    let density_n = if opts.quick { 100_000 } else { 1_000_000 };

    type Job<'a> = Box<dyn Fn() -> crate::Result<CheckResult> + 'a>;
    let jobs: Vec<(&'static str, Job)> = vec![
        ("sieve_vs_trial_division", Box::new(|| sieve_check(opts))),
        ("mu_k_identity", Box::new(|| mu_k_check(opts))),
        ("segment_independence", Box::new(segment_check)),
        ("zeta_intervals", Box::new(zeta_check)),
        ("theta_invariance", Box::new(theta_check)),
        (
            "congruence_binomial_sum",
            Box::new(|| {
                let s = congruence_sum_statistic(&ns, &CONGRUENCE_MODULI, &GRID_ALPHAS)?;
                Ok(check(
                    "congruence_binomial_sum",
                    s,
                    CONGRUENCE_SUM_CAP,
                    format!("max |exact - 1/d| sqrt(α(1-α)n), n = 2^6..2^{top_exp}"),
                ))
            }),
        ),
        (
            "kfree_binomial_sum",
            Box::new(|| {
                let s = kfree_sum_statistic(&ns, &KFREE_SUM_SHIFTS, &[3, 4], &GRID_ALPHAS)?;
                Ok(check(
                    "kfree_binomial_sum",
                    s,
                    KFREE_SUM_CAP,
                    format!("max |exact - M_k| sqrt(α(1-α)n) / (un+v)^(1/k), n = 2^6..2^{top_exp}"),
                ))
            }),
        ),
        (
            "mean_value_of_f",
            Box::new(|| {
                let s = mean_f_statistic(mean_ns)?;
                Ok(check(
                    "mean_value_of_f",
                    s,
                    MEAN_F_CAP,
                    format!("max |Σ f(i) - θN| / N^(1/k), N in {mean_ns:?}"),
                ))
            }),
        ),
        (
            "oracle_equivalence",
            Box::new(|| {
                let s = oracle_discrepancy(&oracle_points, oracle_n)?;
                Ok(check(
                    "oracle_equivalence",
                    s,
                    ORACLE_TOL,
                    format!(
                        "{} walks, N <= {oracle_n}: binomial sums vs path enumeration",
                        oracle_points.len()
                    ),
                ))
            }),
        ),
        (
            "counting_baselines",
            Box::new(|| {
                let wrong = (count_kfree(10, 2)?.count != 7) as u64
                    + (count_kfree(8, 3)?.count != 7) as u64
                    + (count_kfree_ap(20, 2, 4, 2)?.count != 4) as u64;
                Ok(check(
                    "counting_baselines",
                    wrong as f64,
                    0.0,
                    "Q_2(10)=7, Q_3(8)=7, Q_2(20;4,2)=4".into(),
                ))
            }),
        ),
        (
            "residue_partition",
            Box::new(|| {
                let mut wrong = 0u64;
                for k in [2, 3] {
                    let total = count_kfree(count_n, k)?.count;
                    for q in [3, 4, 5] {
                        let mut s = 0;
                        for r in 0..q {
                            s += count_kfree_ap(count_n, k, q, r)?.count;
                        }
                        wrong += (s != total) as u64;
                    }
                }
                Ok(check(
                    "residue_partition",
                    wrong as f64,
                    0.0,
                    format!("Σ_r Q_k(N;q,r) = Q_k(N), N = {count_n}, q = 3, 4, 5"),
                ))
            }),
        ),
        (
            "kfree_density",
            Box::new(|| {
                let c = count_kfree(density_n, 3)?;
                Ok(check(
                    "kfree_density",
                    c.residual.unwrap_or(f64::INFINITY).abs(),
                    1e-3,
                    format!("|Q_3(N)/N - 1/ζ(3)|, N = {density_n}"),
                ))
            }),
        ),
    ];

    let checks: Vec<CheckResult> = jobs
        .into_iter()
        .map(|(name, job)| job().unwrap_or_else(|e| failed(name, e)))
        .collect();
    let failures = checks.iter().filter(|c| !c.pass).count();
    VerifyReport {
        quick: opts.quick,
        checks,
        failures,
    }
}
