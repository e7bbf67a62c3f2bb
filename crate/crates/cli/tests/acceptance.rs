//! Acceptance criteria, one `[PASS]`/`[FAIL]` line each. Exits nonzero if
//! any criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use kfreewalk::arith::zeta_k;
use kfreewalk::constants::{inv_zeta_k, theta_k};
use kfreewalk::counting::{count_kfree, count_kfree_ap};
use kfreewalk::montecarlo::{run_trials, variance_decay, variance_exponent};
use kfreewalk::verify::{
    congruence_sum_statistic, kfree_sum_statistic, mean_f_statistic, oracle_discrepancy,
    oracle_grid, powers_of_two, CONGRUENCE_MODULI, CONGRUENCE_SUM_CAP, GRID_ALPHAS, KFREE_SUM_CAP,
    KFREE_SUM_SHIFTS, MEAN_F_CAP, ORACLE_TOL,
};
use kfreewalk::{WalkParams, DEFAULT_PRIME_LIMIT};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

const SEED: u64 = 20_261_017;

fn ac1_convergence() -> Outcome {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (g, alpha) in [0.25, 0.5, 0.75].into_iter().enumerate() {
        let p = WalkParams::new(3, 3, 6, 0, alpha).map_err(|e| e.to_string())?;
        let theta = theta_k(&p, DEFAULT_PRIME_LIMIT).map_err(|e| e.to_string())?;
        let batch = run_trials(&p, 1_000_000, 64, SEED + g as u64).map_err(|e| e.to_string())?;
        let gap = (batch.mean - 0.767914).abs();
        worst = worst.max(gap);
        parts.push(format!(
            "alpha={alpha}: mean={:.6} theta={:.6}",
            batch.mean, theta.value
        ));
    }
    let elapsed = started.elapsed();
    let ok = worst <= 0.01 && elapsed <= Duration::from_secs(120);
    Ok((
        ok,
        format!(
            "{}; max gap {worst:.2e} <= 1e-2, {:.1}s <= 120s",
            parts.join(", "),
            elapsed.as_secs_f64()
        ),
    ))
}

fn ac2_coprime_steps() -> Outcome {
    let p = WalkParams::new(3, 2, 3, 0, 0.5).map_err(|e| e.to_string())?;
    let z = zeta_k(3, 1_000_000).map_err(|e| e.to_string())?;
    let target = 1.0 / z.value;
    let theta = theta_k(&p, DEFAULT_PRIME_LIMIT).map_err(|e| e.to_string())?;
    let batch = run_trials(&p, 1_000_000, 64, SEED + 10).map_err(|e| e.to_string())?;
    let gap = (batch.mean - target).abs();
    let same = (theta.value - target).abs() <= theta.tail_bound + 1e-12;
    Ok((
        gap <= 0.005 && same,
        format!(
            "mean={:.6}, 1/zeta(3)={target:.6}, theta={:.6}; gap {gap:.2e} <= 5e-3",
            batch.mean, theta.value
        ),
    ))
}

fn ac3_oracle() -> Outcome {
    let started = Instant::now();
    let grid = oracle_grid();
    let worst = oracle_discrepancy(&grid, 14).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    Ok((
        grid.len() == 24 && worst <= ORACLE_TOL && elapsed <= Duration::from_secs(30),
        format!(
            "{} points, N <= 14: max diff {worst:.2e} <= 1e-10, {:.1}s <= 30s",
            grid.len(),
            elapsed.as_secs_f64()
        ),
    ))
}

fn ac4_congruence_sum() -> Outcome {
    let stat = congruence_sum_statistic(&powers_of_two(6, 16), &CONGRUENCE_MODULI, &GRID_ALPHAS)
        .map_err(|e| e.to_string())?;
    Ok((
        stat <= CONGRUENCE_SUM_CAP,
        format!("max statistic {stat:.4} <= {CONGRUENCE_SUM_CAP}"),
    ))
}

fn ac5_kfree_sum() -> Outcome {
    let stat = kfree_sum_statistic(
        &powers_of_two(6, 16),
        &KFREE_SUM_SHIFTS,
        &[3, 4],
        &GRID_ALPHAS,
    )
    .map_err(|e| e.to_string())?;
    Ok((
        stat <= KFREE_SUM_CAP,
        format!("max statistic {stat:.4} <= {KFREE_SUM_CAP}"),
    ))
}

fn ac6_mean_value() -> Outcome {
    let stat = mean_f_statistic(&[1_000, 10_000, 100_000]).map_err(|e| e.to_string())?;
    Ok((
        stat <= MEAN_F_CAP,
        format!("max |sum f - theta N| / N^(1/k) = {stat:.4} <= {MEAN_F_CAP}"),
    ))
}

fn ac7_variance_decay() -> Outcome {
    let ns = powers_of_two(10, 17);
    let mut ok = true;
    let mut parts = Vec::new();
    for (g, k) in [3u32, 4].into_iter().enumerate() {
        let p = WalkParams::new(k, 2, 3, 0, 0.5).map_err(|e| e.to_string())?;
        let fit = variance_decay(&p, &ns, 256, SEED + 20 + g as u64).map_err(|e| e.to_string())?;
        let bound = variance_exponent(k) + 0.15;
        ok &= fit.dropped.is_empty() && fit.within_bound(k, 0.15);
        parts.push(format!("k={k}: slope {:.3} <= {bound:.3}", fit.slope));
    }
    Ok((ok, parts.join(", ")))
}

fn ac8_counting() -> Outcome {
    let e = |r: kfreewalk::Result<kfreewalk::counting::CountReport>| {
        r.map(|c| c.count).map_err(|e| e.to_string())
    };
    let exact = [
        (e(count_kfree(10, 2))?, 7),
        (e(count_kfree(8, 3))?, 7),
        (e(count_kfree_ap(20, 2, 4, 2))?, 4),
    ];
    let exact_ok = exact.iter().all(|(got, want)| got == want);
    let q3 = count_kfree(1_000_000, 3).map_err(|e| e.to_string())?;
    let iz = inv_zeta_k(3, DEFAULT_PRIME_LIMIT).map_err(|e| e.to_string())?;
    let density_gap = (q3.density - iz.value).abs();
    let mut partition_ok = true;
    let total = e(count_kfree(100_000, 3))?;
    for q in [3u64, 4, 5] {
        let mut sum = 0;
        for r in 0..q {
            sum += e(count_kfree_ap(100_000, 3, q, r))?;
        }
        partition_ok &= sum == total;
    }
    Ok((
        exact_ok && density_gap <= 1e-3 && partition_ok,
        format!(
            "Q_2(10)={}, Q_3(8)={}, Q_2(20;4,2)={}; |Q_3(1e6)/1e6 - 1/zeta(3)| = {density_gap:.2e} <= 1e-3; partition {}",
            exact[0].0,
            exact[1].0,
            exact[2].0,
            if partition_ok { "exact" } else { "broken" }
        ),
    ))
}

fn simulate_csv(dir: &std::path::Path, name: &str, threads: &str) -> Result<Vec<u8>, String> {
    let path = dir.join(name);
    let status = Command::new(env!("CARGO_BIN_EXE_kfreewalk"))
        .args(["simulate", "-k", "3", "-a", "3", "-b", "6", "-r", "0"])
        .args([
            "--alpha", "0.4", "-N", "20000", "--trials", "32", "--seed", "99",
        ])
        .arg("--out")
        .arg(&path)
        .env("KFREEWALK_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(String::from_utf8_lossy(&status.stderr).into_owned());
    }
    std::fs::read(&path).map_err(|e| e.to_string())
}

fn ac9_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = simulate_csv(dir.path(), "a.csv", "4")?;
    let second = simulate_csv(dir.path(), "b.csv", "4")?;
    let single = simulate_csv(dir.path(), "c.csv", "1")?;
    let rows = first.iter().filter(|&&c| c == b'\n').count();
    Ok((
        first == second && first == single && rows == 33,
        format!(
            "repeat run identical: {}; 1 vs 4 threads identical: {}; {} bytes",
            first == second,
            first == single,
            first.len()
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (
            "AC1 convergence to theta for (3,3,6,0) over three alphas",
            ac1_convergence,
        ),
        ("AC2 coprime steps converge to 1/zeta(3)", ac2_coprime_steps),
        (
            "AC3 binomial-sum moments equal full path enumeration",
            ac3_oracle,
        ),
        ("AC4 binomial mass in residue classes", ac4_congruence_sum),
        ("AC5 binomial mass on k-free values", ac5_kfree_sum),
        ("AC6 mean value of f", ac6_mean_value),
        ("AC7 variance decay exponent", ac7_variance_decay),
        ("AC8 counting baselines", ac8_counting),
        ("AC9 deterministic simulate output", ac9_determinism),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let started = Instant::now();
        let (pass, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failures += usize::from(!pass);
        println!(
            "[{}] {name}: {detail} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failures} failed", 9 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
