//! Reproducible simulation of α-random walks and the diagnostics built on
//! it: batch means, variance decay in N, and convergence toward θ_k.
//!
//! Every trial is a pure function of `(params, N, trial_seed)`, and batches
//! are reduced in trial-index order, so a [`TrialBatch`] does not depend on
//! how many worker threads ran it.

mod cache;
pub mod rng;

pub use cache::{KfreeCache, DEFAULT_SEGMENT_BITS};
pub use rng::{mix64, trial_seed, SplitMix64};

use rayon::prelude::*;
use serde::Serialize;

use crate::constants::{theta_k, DensityConstant, WalkParams};
use crate::error::{Error, Result};
use crate::stats::{log_log_fit, mean_and_variance};

/// One simulated walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkOutcome {
    /// `hits / N`
    pub sbar: f64,
    /// Number of k-free positions among `P_1, ..., P_N`.
    pub hits: u64,
    /// Number of `a`-steps taken.
    pub a_steps: u64,
    pub final_position: u64,
}

/// Walks `N` steps from `r`, recording the hit count after each step listed
/// in `checkpoints` (strictly increasing, last one `N`).
fn walk_checkpoints(
    cache: &KfreeCache,
    p: &WalkParams,
    checkpoints: &[u64],
    seed: u64,
    mut record: impl FnMut(u64, u64, u64),
) {
    let bits = cache.segment_bits();
    let mask = (1u64 << bits) - 1;
    let mut rng = SplitMix64::new(seed);
    let mut pos = p.r;
    let mut hits = 0u64;
    let mut a_steps = 0u64;
    let mut seg_idx = usize::MAX;
    let mut seg: &[i8] = &[];
    let mut step = 0u64;
    for &stop in checkpoints {
        while step < stop {
            // W = a iff U < α, U uniform on the 2^53-point grid in [0, 1)
            if rng.next_f64() < p.alpha {
                pos += p.a;
                a_steps += 1;
            } else {
                pos += p.b;
            }
            let idx = (pos >> bits) as usize;
            if idx != seg_idx {
                seg = cache.segment(idx);
                seg_idx = idx;
            }
            hits += (seg[(pos & mask) as usize] != 0) as u64;
            step += 1;
        }
        record(stop, hits, a_steps);
    }
    debug_assert_eq!(pos, p.position(step, a_steps));
}

fn check_cache(cache: &KfreeCache, p: &WalkParams, n: u64) -> Result<()> {
    let top = p.max_position(n)?;
    if cache.k() != p.k || cache.limit() < top {
        return Err(Error::param(
            "cache",
            format!(
                "cache (k={}, limit={}) does not cover k={} up to {top}",
                cache.k(),
                cache.limit(),
                p.k
            ),
        ));
    }
    Ok(())
}

/// A cache big enough for `N` steps of `p`.
pub fn cache_for(p: &WalkParams, n: u64) -> Result<KfreeCache> {
    p.validate()?;
    KfreeCache::new(p.k, p.max_position(n)?)
}

/// Simulates one walk using a caller-provided cache.
pub fn simulate_walk_in(
    cache: &KfreeCache,
    p: &WalkParams,
    n: u64,
    trial_seed: u64,
) -> Result<WalkOutcome> {
    p.validate()?;
    if n == 0 {
        return Err(Error::param("N", "must be at least 1"));
    }
    check_cache(cache, p, n)?;
    let mut out = None;
    walk_checkpoints(cache, p, &[n], trial_seed, |_, hits, a_steps| {
        out = Some(WalkOutcome {
            sbar: hits as f64 / n as f64,
            hits,
            a_steps,
            final_position: p.position(n, a_steps),
        });
    });
    Ok(out.expect("one checkpoint"))
}

/// Simulates one walk of `N` steps.
pub fn simulate_walk(p: &WalkParams, n: u64, trial_seed: u64) -> Result<WalkOutcome> {
    simulate_walk_in(&cache_for(p, n)?, p, n, trial_seed)
}

/// Independent replications of the hit fraction at a fixed `N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialBatch {
    pub params: WalkParams,
    pub n: u64,
    pub master_seed: u64,
    pub trials: u64,
    pub sbar_values: Vec<f64>,
    pub mean: f64,
    pub sample_variance: f64,
}

impl TrialBatch {
    fn from_values(p: &WalkParams, n: u64, master_seed: u64, sbar_values: Vec<f64>) -> Self {
        let (mean, sample_variance) = mean_and_variance(&sbar_values);
        TrialBatch {
            params: *p,
            n,
            master_seed,
            trials: sbar_values.len() as u64,
            sbar_values,
            mean,
            sample_variance,
        }
    }

    /// Seed used by trial `t`.
    pub fn seed(&self, t: u64) -> u64 {
        trial_seed(self.master_seed, t)
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.sample_variance / self.trials as f64).sqrt()
    }
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    Ok(())
}

/// `trials` walks with seeds `trial_seed(master_seed, t)`, using a shared cache.
pub fn run_trials_in(
    cache: &KfreeCache,
    p: &WalkParams,
    n: u64,
    trials: u64,
    master_seed: u64,
) -> Result<TrialBatch> {
    check_trials(trials)?;
    if n == 0 {
        return Err(Error::param("N", "must be at least 1"));
    }
    p.validate()?;
    check_cache(cache, p, n)?;
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            simulate_walk_in(cache, p, n, trial_seed(master_seed, t))
                .map(|o| o.sbar)
                .expect("inputs validated above")
        })
        .collect();
    Ok(TrialBatch::from_values(p, n, master_seed, values))
}

pub fn run_trials(p: &WalkParams, n: u64, trials: u64, master_seed: u64) -> Result<TrialBatch> {
    run_trials_in(&cache_for(p, n)?, p, n, trials, master_seed)
}

/// Log-log least-squares fit of the empirical variance of S̄_N against N.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub ns: Vec<u64>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Grid points left out of the fit because their variance was zero.
    pub dropped: Vec<u64>,
}

/// The decay exponent `1/k - 1/2` that the variance must at least match.
pub fn variance_exponent(k: u32) -> f64 {
    1.0 / k as f64 - 0.5
}

impl DecayFit {
    /// `slope <= 1/k - 1/2 + slack`. Faster decay is fine.
    pub fn within_bound(&self, k: u32, slack: f64) -> bool {
        self.slope <= variance_exponent(k) + slack
    }
}

fn check_grid(ns: &[u64], min_len: usize) -> Result<()> {
    if ns.len() < min_len {
        return Err(Error::GridTooShort {
            min: min_len,
            got: ns.len(),
        });
    }
    if ns[0] == 0 {
        return Err(Error::param("N", "grid values must be at least 1"));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::GridNotIncreasing);
    }
    Ok(())
}

/// Sample variance of S̄_N from an independent batch at each grid point
/// (batch `g` uses master seed `trial_seed(master_seed, g)`), fitted as a
/// power of N.
pub fn variance_decay(
    p: &WalkParams,
    ns: &[u64],
    trials_per_n: u64,
    master_seed: u64,
) -> Result<DecayFit> {
    p.validate()?;
    check_grid(ns, 4)?;
    if trials_per_n < 2 {
        return Err(Error::param("trials", "variance needs at least 2 trials"));
    }
    let cache = cache_for(p, *ns.last().unwrap())?;
    let mut means = Vec::with_capacity(ns.len());
    let mut variances = Vec::with_capacity(ns.len());
    for (g, &n) in ns.iter().enumerate() {
        let batch = run_trials_in(
            &cache,
            p,
            n,
            trials_per_n,
            trial_seed(master_seed, g as u64),
        )?;
        means.push(batch.mean);
        variances.push(batch.sample_variance);
    }
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let (fit, dropped_idx) = log_log_fit(&xs, &variances)?;
    let dropped: Vec<u64> = dropped_idx.iter().map(|&i| ns[i]).collect();
    for n in &dropped {
        log::warn!("zero sample variance at N = {n}; left out of the decay fit");
    }
    Ok(DecayFit {
        ns: ns.to_vec(),
        means,
        variances,
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        dropped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: u64,
    pub mean: f64,
    pub abs_gap: f64,
    pub sample_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub theta: DensityConstant,
    pub trials: u64,
    pub master_seed: u64,
    pub rows: Vec<ConvergenceRow>,
}

/// Batch mean of S̄_N against θ_k along a grid of N.
///
/// Every row reuses the same trial seeds, so each trial is one path observed
/// at increasing N, and the row at N equals `run_trials(p, N, trials,
/// master_seed)`.
pub fn convergence_report(
    p: &WalkParams,
    ns: &[u64],
    trials: u64,
    master_seed: u64,
    prime_limit: u64,
) -> Result<ConvergenceReport> {
    p.validate()?;
    check_grid(ns, 1)?;
    check_trials(trials)?;
    let theta = theta_k(p, prime_limit)?;
    let cache = cache_for(p, *ns.last().unwrap())?;
    let per_trial: Vec<Vec<u64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut hits = Vec::with_capacity(ns.len());
            walk_checkpoints(&cache, p, ns, trial_seed(master_seed, t), |_, h, _| {
                hits.push(h)
            });
            hits
        })
        .collect();
    let rows = ns
        .iter()
        .enumerate()
        .map(|(g, &n)| {
            let values: Vec<f64> = per_trial.iter().map(|h| h[g] as f64 / n as f64).collect();
            let (mean, var) = mean_and_variance(&values);
            ConvergenceRow {
                n,
                mean,
                abs_gap: (mean - theta.value).abs(),
                sample_std: var.sqrt(),
            }
        })
        .collect();
    Ok(ConvergenceReport {
        theta,
        trials,
        master_seed,
        rows,
    })
}
