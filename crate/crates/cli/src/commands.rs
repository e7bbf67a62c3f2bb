use std::time::Instant;

use anyhow::{bail, Result};
use kfreewalk::arith::gcd;
use kfreewalk::constants::{beta_k, theta_k};
use kfreewalk::counting::count_kfree_ap;
use kfreewalk::exactdist::{
    exact_moments, gap_table, oracle_full_paths, ExactMoments, DEFAULT_PAIR_CAP,
};
use kfreewalk::montecarlo::{convergence_report, run_trials, variance_decay, variance_exponent};
use kfreewalk::verify::{run_suite, VerifyOptions, ORACLE_TOL};
use kfreewalk::{WalkParams, DEFAULT_PRIME_LIMIT};
use log::info;
use serde::Serialize;

use crate::args::{
    BetaArgs, CountArgs, DecayArgs, ExactArgs, Format, SimulateArgs, ThetaArgs, VerifyArgs, Walk,
};
use crate::config::{parse_alpha, parse_count, parse_grid, parse_k, Grid, Resolver};
use crate::output::{csv_table, emit, json, num};

const DEFAULT_K: u32 = 3;
const DEFAULT_A: u64 = 2;
const DEFAULT_B: u64 = 3;
const DEFAULT_ALPHA: f64 = 0.5;
const DEFAULT_SIM_N: u64 = 100_000;
const DEFAULT_SIM_TRIALS: u64 = 64;
const DEFAULT_EXACT_N: u64 = 12;
const DEFAULT_COUNT_N: u64 = 1_000_000;
const DEFAULT_DECAY_TRIALS: u64 = 256;
const DEFAULT_DECAY_GRID: &str = "2^10..2^14";

struct Resolved {
    params: WalkParams,
    prime_limit: u64,
}

fn walk(res: &mut Resolver, w: &Walk) -> Result<Resolved> {
    let params = WalkParams {
        k: res.or("k", w.k, DEFAULT_K, parse_k)?,
        a: res.or("a", w.a, DEFAULT_A, parse_count)?,
        b: res.or("b", w.b, DEFAULT_B, parse_count)?,
        r: res.or("r", w.r, 0, parse_count)?,
        alpha: res.or("alpha", w.alpha, DEFAULT_ALPHA, parse_alpha)?,
    };
    params.validate().map_err(|e| res.explain(e))?;
    let prime_limit = res.or(
        "prime_limit",
        w.prime_limit,
        DEFAULT_PRIME_LIMIT,
        parse_count,
    )?;
    Ok(Resolved {
        params,
        prime_limit,
    })
}

fn seed_or_entropy(res: &mut Resolver, flag: Option<u64>) -> Result<u64> {
    Ok(match res.get("seed", flag, parse_count)? {
        Some(s) => s,
        None => {
            let s = rand::random();
            info!("no seed given; using master seed {s}");
            s
        }
    })
}

fn write(common_out: Option<std::path::PathBuf>, bytes: &[u8]) -> Result<()> {
    emit(common_out.as_deref(), bytes)
}

#[derive(Serialize)]
struct ThetaRow {
    k: u32,
    a: u64,
    b: u64,
    r: u64,
    value: f64,
    tail_bound: f64,
}

#[derive(Serialize)]
struct ThetaJson {
    #[serde(flatten)]
    row: ThetaRow,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

pub fn theta(args: ThetaArgs) -> Result<u8> {
    let mut res = Resolver::new(args.common.config.as_deref())?;
    let Resolved {
        params: p,
        prime_limit,
    } = walk(&mut res, &args.walk)?;
    let format = res.format(args.common.format, Format::Csv)?;
    let out = res.out(args.common.out)?;
    let t = theta_k(&p, prime_limit).map_err(|e| res.explain(e))?;
    let note = (gcd(p.a, p.b)? == 1)
        .then(|| format!("gcd(a,b)=1, so theta_{}(a,b,r) = 1/zeta({})", p.k, p.k));
    let row = ThetaRow {
        k: p.k,
        a: p.a,
        b: p.b,
        r: p.r,
        value: t.value,
        tail_bound: t.tail_bound,
    };
    let bytes = match format {
        Format::Json => json(&ThetaJson { row, note })?,
        Format::Csv => {
            let footer: Vec<_> = note.into_iter().map(|n| ("note", n)).collect();
            csv_table(&[row], &footer)?
        }
    };
    write(out, &bytes)?;
    Ok(0)
}

#[derive(Serialize)]
struct BetaOut {
    k: u32,
    q: u64,
    r: u64,
    value: f64,
    tail_bound: f64,
}

pub fn beta(args: BetaArgs) -> Result<u8> {
    let mut res = Resolver::new(args.common.config.as_deref())?;
    let k = res.or("k", args.k, DEFAULT_K, parse_k)?;
    let q = res.or("q", args.q, 1, parse_count)?;
    let r = res.or("r", args.r, 0, parse_count)?;
    let prime_limit = res.or(
        "prime_limit",
        args.prime_limit,
        DEFAULT_PRIME_LIMIT,
        parse_count,
    )?;
    let format = res.format(args.common.format, Format::Csv)?;
    let out = res.out(args.common.out)?;
    let b = beta_k(k, q, r, prime_limit).map_err(|e| res.explain(e))?;
    let row = BetaOut {
        k,
        q,
        r,
        value: b.value,
        tail_bound: b.tail_bound,
    };
    let bytes = match format {
        Format::Json => json(&row)?,
        Format::Csv => csv_table(&[row], &[])?,
    };
    write(out, &bytes)?;
    Ok(0)
}

#[derive(Serialize)]
struct TrialRow {
    trial: u64,
    seed: u64,
    sbar: f64,
}

#[derive(Serialize)]
struct SimulateSummary {
    k: u32,
    a: u64,
    b: u64,
    r: u64,
    alpha: f64,
    #[serde(rename = "N")]
    n: u64,
    trials: u64,
    master_seed: u64,
    mean: f64,
    sample_variance: f64,
    std_error: f64,
    theta: f64,
    theta_tail_bound: f64,
    abs_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    rows: Option<Vec<TrialRow>>,
}

#[derive(Serialize)]
struct ConvergenceRow {
    #[serde(rename = "N")]
    n: u64,
    mean: f64,
    abs_gap: f64,
    sample_std: f64,
}

#[derive(Serialize)]
struct ConvergenceSummary {
    k: u32,
    a: u64,
    b: u64,
    r: u64,
    alpha: f64,
    trials: u64,
    master_seed: u64,
    theta: f64,
    theta_tail_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    rows: Option<Vec<ConvergenceRow>>,
}

/// Table to `--out` (or stdout). In CSV mode the JSON summary goes to stdout
/// when the table went to a file, and to stderr otherwise.
fn table_and_summary(
    format: Format,
    out: Option<std::path::PathBuf>,
    table: Vec<u8>,
    summary: Vec<u8>,
) -> Result<()> {
    match format {
        Format::Json => write(out, &summary),
        Format::Csv => {
            let to_file = out.is_some();
            write(out, &table)?;
            if to_file {
                emit(None, &summary)
            } else {
                eprint!("{}", String::from_utf8_lossy(&summary));
                Ok(())
            }
        }
    }
}

pub fn simulate(args: SimulateArgs) -> Result<u8> {
    let mut res = Resolver::new(args.common.config.as_deref())?;
    let Resolved {
        params: p,
        prime_limit,
    } = walk(&mut res, &args.walk)?;
    let trials = res.or("trials", args.trials, DEFAULT_SIM_TRIALS, parse_count)?;
    let grid = res.get("grid", args.grid, parse_grid)?;
    let n = res.or("N", args.n, DEFAULT_SIM_N, parse_count)?;
    let format = res.format(args.common.format, Format::Csv)?;
    let out = res.out(args.common.out)?;
    let master_seed = seed_or_entropy(&mut res, args.seed)?;

    if let Some(Grid(ns)) = grid {
        let report = convergence_report(&p, &ns, trials, master_seed, prime_limit)
            .map_err(|e| res.explain(e))?;
        let rows: Vec<ConvergenceRow> = report
            .rows
            .iter()
            .map(|r| ConvergenceRow {
                n: r.n,
                mean: r.mean,
                abs_gap: r.abs_gap,
                sample_std: r.sample_std,
            })
            .collect();
        let table = csv_table(&rows, &[])?;
        let summary = ConvergenceSummary {
            k: p.k,
            a: p.a,
            b: p.b,
            r: p.r,
            alpha: p.alpha,
            trials,
            master_seed,
            theta: report.theta.value,
            theta_tail_bound: report.theta.tail_bound,
            rows: (format == Format::Json).then_some(rows),
        };
        table_and_summary(format, out, table, json(&summary)?)?;
        return Ok(0);
    }

    let theta = theta_k(&p, prime_limit).map_err(|e| res.explain(e))?;
    let started = Instant::now();
    let batch = run_trials(&p, n, trials, master_seed).map_err(|e| res.explain(e))?;
    info!(
        "{trials} walks of {n} steps in {:.3}s",
        started.elapsed().as_secs_f64()
    );
    let rows: Vec<TrialRow> = batch
        .sbar_values
        .iter()
        .zip(0..)
        .map(|(&sbar, t)| TrialRow {
            trial: t,
            seed: batch.seed(t),
            sbar,
        })
        .collect();
    let table = csv_table(&rows, &[])?;
    let summary = SimulateSummary {
        k: p.k,
        a: p.a,
        b: p.b,
        r: p.r,
        alpha: p.alpha,
        n,
        trials,
        master_seed,
        mean: batch.mean,
        sample_variance: batch.sample_variance,
        std_error: batch.std_error(),
        theta: theta.value,
        theta_tail_bound: theta.tail_bound,
        abs_gap: (batch.mean - theta.value).abs(),
        rows: (format == Format::Json).then_some(rows),
    };
    table_and_summary(format, out, table, json(&summary)?)?;
    Ok(0)
}

#[derive(Serialize)]
struct ExactRow {
    i: u64,
    e_xi: f64,
    f_i: f64,
    gap: f64,
}

#[derive(Serialize)]
struct ExactSummary {
    k: u32,
    a: u64,
    b: u64,
    r: u64,
    alpha: f64,
    #[serde(rename = "N")]
    n: u64,
    e_sbar: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    v_sbar: Option<f64>,
    max_scaled_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_max_abs_diff: Option<f64>,
    rows: Vec<ExactRow>,
}

fn max_abs_diff(m: &ExactMoments, o: &ExactMoments) -> f64 {
    let mut d = (m.e_sbar - o.e_sbar).abs();
    for (x, y) in m.e_xi.iter().zip(&o.e_xi) {
        d = d.max((x - y).abs());
    }
    if let (Some(x), Some(y)) = (m.v_sbar, o.v_sbar) {
        d = d.max((x - y).abs());
    }
    d
}

pub fn exact(args: ExactArgs) -> Result<u8> {
    let mut res = Resolver::new(args.common.config.as_deref())?;
    let Resolved { params: p, .. } = walk(&mut res, &args.walk)?;
    let n = res.or("N", args.n, DEFAULT_EXACT_N, parse_count)?;
    let oracle = res.switch("oracle", args.oracle)?;
    let variance = res.switch("variance", args.variance)? || oracle;
    let pair_cap = res.or("pair_cap", args.pair_cap, DEFAULT_PAIR_CAP, parse_count)?;
    let format = res.format(args.common.format, Format::Csv)?;
    let out = res.out(args.common.out)?;

    let m = exact_moments(&p, n, variance, pair_cap).map_err(|e| res.explain(e))?;
    let gaps = gap_table(&m)?;
    let max_scaled_gap = gaps.iter().map(|g| g.scaled_gap).fold(0.0, f64::max);
    let diff = if oracle {
        let o = oracle_full_paths(&p, n).map_err(|e| res.explain(e))?;
        Some(max_abs_diff(&m, &o))
    } else {
        None
    };
    let rows: Vec<ExactRow> = gaps
        .iter()
        .map(|g| ExactRow {
            i: g.i,
            e_xi: g.e_xi,
            f_i: g.f_i,
            gap: g.gap,
        })
        .collect();
    let bytes = match format {
        Format::Json => json(&ExactSummary {
            k: p.k,
            a: p.a,
            b: p.b,
            r: p.r,
            alpha: p.alpha,
            n,
            e_sbar: m.e_sbar,
            v_sbar: m.v_sbar,
            max_scaled_gap,
            oracle_max_abs_diff: diff,
            rows,
        })?,
        Format::Csv => {
            let mut footer = vec![("e_sbar", num(m.e_sbar))];
            if let Some(v) = m.v_sbar {
                footer.push(("v_sbar", num(v)));
            }
            footer.push(("max_scaled_gap", num(max_scaled_gap)));
            if let Some(d) = diff {
                footer.push(("oracle_max_abs_diff", num(d)));
            }
            csv_table(&rows, &footer)?
        }
    };
    write(out, &bytes)?;
    if let Some(d) = diff {
        if d > ORACLE_TOL {
            bail!("exact moments differ from full path enumeration by {d:e} (tolerance {ORACLE_TOL:e})");
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct CheckRow<'a> {
    name: &'a str,
    pass: bool,
    statistic: f64,
    threshold: f64,
    detail: &'a str,
}

pub fn verify(args: VerifyArgs) -> Result<u8> {
    let mut res = Resolver::new(args.common.config.as_deref())?;
    let quick = res.switch("quick", args.quick)?;
    let format = res.format(args.common.format, Format::Json)?;
    let out = res.out(args.common.out)?;
    let report = run_suite(&VerifyOptions {
        quick,
        perturb_sieve: args.inject_fault,
    });
    for c in report.checks.iter().filter(|c| !c.pass) {
        log::error!("check {} failed: {}", c.name, c.detail);
    }
    let bytes = match format {
        Format::Json => json(&report)?,
        Format::Csv => {
            let rows: Vec<CheckRow> = report
                .checks
                .iter()
                .map(|c| CheckRow {
                    name: c.name,
                    pass: c.pass,
                    statistic: c.statistic,
                    threshold: c.threshold,
                    detail: &c.detail,
                })
                .collect();
            csv_table(&rows, &[("failures", report.failures.to_string())])?
        }
    };
    write(out, &bytes)?;
    Ok(report.failures.min(u8::MAX as usize) as u8)
}

pub fn count(args: CountArgs) -> Result<u8> {
    let mut res = Resolver::new(args.common.config.as_deref())?;
    let k = res.or("k", args.k, 2, parse_k)?;
    let q = res.or("q", args.q, 1, parse_count)?;
    let r = res.or("r", args.r, 0, parse_count)?;
    let ns = match res.get("grid", args.grid, parse_grid)? {
        Some(Grid(ns)) => ns,
        None => vec![res.or("N", args.n, DEFAULT_COUNT_N, parse_count)?],
    };
    let format = res.format(args.common.format, Format::Csv)?;
    let out = res.out(args.common.out)?;
    let mut rows = Vec::with_capacity(ns.len());
    for n in ns {
        let started = Instant::now();
        let report = count_kfree_ap(n, k, q, r).map_err(|e| res.explain(e))?;
        let secs = started.elapsed().as_secs_f64();
        info!(
            "sieved {n} integers in {secs:.3}s ({:.3e} integers/s)",
            n as f64 / secs.max(1e-9)
        );
        rows.push(report);
    }
    let bytes = match format {
        Format::Json => json(&rows)?,
        Format::Csv => csv_table(&rows, &[])?,
    };
    write(out, &bytes)?;
    Ok(0)
}

#[derive(Serialize)]
struct DecayRow {
    #[serde(rename = "N")]
    n: u64,
    variance: f64,
}

#[derive(Serialize)]
struct DecaySummary {
    k: u32,
    a: u64,
    b: u64,
    r: u64,
    alpha: f64,
    trials: u64,
    master_seed: u64,
    slope: f64,
    intercept: f64,
    r_squared: f64,
    exponent: f64,
    dropped: Vec<u64>,
    rows: Vec<DecayRow>,
}

pub fn decay(args: DecayArgs) -> Result<u8> {
    let mut res = Resolver::new(args.common.config.as_deref())?;
    let Resolved { params: p, .. } = walk(&mut res, &args.walk)?;
    let Grid(ns) = match res.get("grid", args.grid, parse_grid)? {
        Some(g) => g,
        None => parse_grid(DEFAULT_DECAY_GRID).expect("default grid parses"),
    };
    let trials = res.or("trials", args.trials, DEFAULT_DECAY_TRIALS, parse_count)?;
    let format = res.format(args.common.format, Format::Csv)?;
    let out = res.out(args.common.out)?;
    let master_seed = seed_or_entropy(&mut res, args.seed)?;
    let fit = variance_decay(&p, &ns, trials, master_seed).map_err(|e| res.explain(e))?;
    let rows: Vec<DecayRow> = fit
        .ns
        .iter()
        .zip(&fit.variances)
        .map(|(&n, &variance)| DecayRow { n, variance })
        .collect();
    let exponent = variance_exponent(p.k);
    let bytes = match format {
        Format::Json => json(&DecaySummary {
            k: p.k,
            a: p.a,
            b: p.b,
            r: p.r,
            alpha: p.alpha,
            trials,
            master_seed,
            slope: fit.slope,
            intercept: fit.intercept,
            r_squared: fit.r_squared,
            exponent,
            dropped: fit.dropped.clone(),
            rows,
        })?,
        Format::Csv => {
            let dropped: Vec<String> = fit.dropped.iter().map(u64::to_string).collect();
            csv_table(
                &rows,
                &[
                    ("slope", num(fit.slope)),
                    ("intercept", num(fit.intercept)),
                    ("r_squared", num(fit.r_squared)),
                    ("exponent", num(exponent)),
                    ("master_seed", master_seed.to_string()),
                    ("dropped", dropped.join(" ")),
                ],
            )?
        }
    };
    write(out, &bytes)?;
    Ok(0)
}
