use std::path::Path;
use std::process::{Command, Output};

fn kfreewalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kfreewalk"))
        .args(args)
        .env_remove("KFREEWALK_THREADS")
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = kfreewalk(args);
    assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    stdout(&o)
}

fn csv_field(text: &str, column: &str) -> String {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == column).unwrap();
    lines
        .next()
        .unwrap()
        .split(',')
        .nth(idx)
        .unwrap()
        .to_string()
}

fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn theta_values() {
    let out = ok(&["theta", "-k", "3", "-a", "2", "-b", "3", "-r", "0"]);
    let v: f64 = csv_field(&out, "value").parse().unwrap();
    assert!((v - 0.831907).abs() < 1e-6);
    assert!(out.contains("# note=gcd(a,b)=1"));

    let out = ok(&["theta", "-k", "3", "-a", "3", "-b", "6", "-r", "0"]);
    let v: f64 = csv_field(&out, "value").parse().unwrap();
    let bound: f64 = csv_field(&out, "tail_bound").parse().unwrap();
    assert!((v - 0.767914).abs() < 1e-6);
    assert!(bound > 0.0 && bound < 1e-9);
    assert!(!out.contains("note"));
}

#[test]
fn theta_json_mirrors_csv_names() {
    let v = json(&ok(&["theta", "-a", "3", "-b", "6", "--format", "json"]));
    for key in ["k", "a", "b", "r", "value", "tail_bound"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn invalid_walks_are_rejected_by_name() {
    let o = kfreewalk(&["theta", "-k", "3", "-a", "2", "-b", "2", "-r", "0"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("a must differ from b"));

    let o = kfreewalk(&[
        "simulate", "-N", "10", "--trials", "2", "--seed", "1", "--alpha", "1.0",
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("alpha must lie in (0,1)"));

    let o = kfreewalk(&["theta", "-k", "1"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("k must be at least 2"));
}

#[test]
fn simulate_minimal_run_is_reproducible() {
    let args = ["simulate", "-N", "10", "--trials", "2", "--seed", "42"];
    let first = ok(&args);
    assert_eq!(first, ok(&args));
    let lines: Vec<&str> = first.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "trial,seed,sbar");
    assert!(lines[1].starts_with("0,"));
    assert!(lines[2].starts_with("1,"));
}

#[test]
fn simulate_summary_and_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trials.csv");
    let out = ok(&[
        "simulate",
        "-a",
        "3",
        "-b",
        "6",
        "-N",
        "2000",
        "--trials",
        "8",
        "--seed",
        "7",
        "--out",
        path.to_str().unwrap(),
    ]);
    let summary = json(&out);
    for key in [
        "mean",
        "sample_variance",
        "theta",
        "theta_tail_bound",
        "abs_gap",
    ] {
        assert!(summary[key].is_f64(), "{key}");
    }
    assert_eq!(summary["master_seed"], 7);
    let csv = std::fs::read_to_string(&path).unwrap();
    assert_eq!(csv.lines().count(), 9);
    let mean: f64 = csv
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum::<f64>()
        / 8.0;
    assert!((mean - summary["mean"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn simulate_without_seed_echoes_a_replayable_seed() {
    let o = kfreewalk(&["simulate", "-N", "50", "--trials", "3"]);
    assert!(o.status.success());
    let summary = json(&stderr(&o));
    let seed = summary["master_seed"].as_u64().unwrap().to_string();
    let replay = ok(&["simulate", "-N", "50", "--trials", "3", "--seed", &seed]);
    assert_eq!(stdout(&o), replay);
}

#[test]
fn simulate_json_carries_trial_rows() {
    let v = json(&ok(&[
        "simulate", "-N", "10", "--trials", "2", "--seed", "3", "--format", "json",
    ]));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for key in ["trial", "seed", "sbar"] {
        assert!(rows[0].get(key).is_some());
    }
}

#[test]
fn simulate_grid_gives_convergence_table() {
    let out = ok(&[
        "simulate",
        "--grid",
        "100,1000,10^4",
        "--trials",
        "4",
        "--seed",
        "1",
    ]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "N,mean,abs_gap,sample_std");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("10000,"));
}

#[test]
fn failed_write_leaves_no_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("taken");
    std::fs::create_dir(&target).unwrap();
    let o = kfreewalk(&[
        "simulate",
        "-N",
        "10",
        "--trials",
        "2",
        "--seed",
        "1",
        "--out",
        target.to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);

    let missing = dir.path().join("no/such/dir/out.csv");
    let o = kfreewalk(&["count", "-N", "10", "--out", missing.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(!missing.exists());
}

#[test]
fn count_examples() {
    let out = ok(&["count", "-k", "2", "-N", "10"]);
    assert_eq!(
        out.lines().next().unwrap(),
        "N,k,q,r,count,density,predicted,residual"
    );
    assert_eq!(csv_field(&out, "count"), "7");
    let out = ok(&["count", "-k", "2", "-N", "20", "-q", "4", "-r", "2"]);
    assert_eq!(csv_field(&out, "count"), "4");
    let o = kfreewalk(&["count", "-k", "2", "-N", "10", "-q", "4", "-r", "5"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("r="));
}

#[test]
fn count_leaves_prediction_empty_when_gcd_is_not_kfree() {
    let out = ok(&["count", "-k", "2", "-N", "100", "-q", "4", "-r", "0"]);
    assert_eq!(out.lines().nth(1).unwrap(), "100,2,4,0,0,0.0,,");
}

#[test]
fn exact_outputs() {
    let out = ok(&["exact", "-N", "1"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "i,e_xi,f_i,gap");
    assert!(lines[1].starts_with("1,"));
    assert!(lines[2..].iter().all(|l| l.starts_with('#')));

    let out = ok(&["exact", "-a", "3", "-b", "6", "-N", "12", "--oracle"]);
    assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 13);
    assert!(out.contains("# v_sbar="));
    assert!(out.contains("# max_scaled_gap="));
    let diff: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("# oracle_max_abs_diff="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(diff <= 1e-10);
}

#[test]
fn exact_refusals_name_the_cap() {
    let o = kfreewalk(&["exact", "-N", "5000", "--variance"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("3000"));
    let o = kfreewalk(&["exact", "-N", "50", "--variance", "--pair-cap", "40"]);
    assert!(stderr(&o).contains("pair cap 40"));
    let o = kfreewalk(&["exact", "-N", "21", "--oracle"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("N <= 20"));
}

#[test]
fn verify_quick_passes_and_fault_injection_fails() {
    let o = kfreewalk(&["verify", "--quick"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let report = json(&stdout(&o));
    assert_eq!(report["failures"], 0);
    assert!(report["checks"].as_array().unwrap().len() >= 10);

    let o = kfreewalk(&["verify", "--quick", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(1));
    let report = json(&stdout(&o));
    let failed: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["sieve_vs_trial_division"]);
}

#[test]
fn decay_reports_fit() {
    let out = ok(&[
        "decay",
        "--grid",
        "2^8..2^11",
        "--trials",
        "16",
        "--seed",
        "2",
    ]);
    assert_eq!(out.lines().next().unwrap(), "N,variance");
    assert!(out.contains("# slope="));
    assert!(out.contains("# exponent=-0.16666666666666669"));
    let o = kfreewalk(&["decay", "--grid", "10,20", "--seed", "1"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("at least 4"));
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.conf");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn config_file_fills_in_unset_flags() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), "# walk\nk=3\na=3\nb=6\nr=0\nformat=json\n");
    let v = json(&ok(&["theta", "--config", &conf]));
    assert!((v["value"].as_f64().unwrap() - 0.767914).abs() < 1e-6);
    let v = json(&ok(&["theta", "--config", &conf, "-b", "9"]));
    assert_eq!(v["b"], 9);
    let csv = ok(&["theta", "--config", &conf, "--format", "csv"]);
    assert!(csv.starts_with("k,a,b,r,value,tail_bound\n"));
}

#[test]
fn config_errors_name_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), "k=3\nstep=4\n");
    let o = kfreewalk(&["theta", "--config", &conf]);
    assert!(!o.status.success());
    assert!(
        stderr(&o).contains("run.conf line 2: unknown key 'step'"),
        "{}",
        stderr(&o)
    );

    let conf = write_config(dir.path(), "a=2\n\nalpha=1.5\n");
    let o = kfreewalk(&["simulate", "--config", &conf, "-N", "10"]);
    assert!(
        stderr(&o).contains("run.conf line 3: alpha: alpha must lie in (0,1)"),
        "{}",
        stderr(&o)
    );

    let conf = write_config(dir.path(), "trials=lots\n");
    let o = kfreewalk(&["simulate", "--config", &conf]);
    assert!(
        stderr(&o).contains("run.conf line 1: trials: expected"),
        "{}",
        stderr(&o)
    );

    let o = kfreewalk(&["theta", "--config", "/nonexistent/run.conf"]);
    assert!(stderr(&o).contains("cannot read config file"));
}

#[test]
fn thread_variable_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_kfreewalk"))
        .args(["theta"])
        .env("KFREEWALK_THREADS", "zero")
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(stderr(&o).contains("KFREEWALK_THREADS"));
}
