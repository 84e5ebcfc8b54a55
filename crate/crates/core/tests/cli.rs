mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::read_csv;

fn mfcir(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfcir"))
        .args(args)
        .output()
        .expect("failed to launch mfcir")
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> String {
    let out = dir.join(name);
    let mut full = args.to_vec();
    let out_str = out.to_str().unwrap();
    full.extend(["--out", out_str]);
    let status = mfcir(&full);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    std::fs::read_to_string(out).unwrap()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or_else(|_| panic!("not a number: {s}"))
}

#[test]
fn simulate_rows_and_transform() {
    let dir = tempfile::tempdir().unwrap();
    let text = run_to(dir.path(), "sim.csv", &["simulate", "--paths", "2", "--n", "2", "--sigma", "0.8", "--theta", "2"]);
    let (header, rows) = read_csv(&text);
    assert_eq!(header, ["path_id", "t", "z", "r"]);
    assert_eq!(rows.len(), 6);
    let ids: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(ids, ["0", "0", "0", "1", "1", "1"]);
    for row in &rows {
        let (z, r) = (num(&row[2]), num(&row[3]));
        let half = 0.8 * z / 2.0;
        assert!((r - half * half).abs() <= f64::EPSILON * r);
        assert!(z > 0.0);
    }
    let times: Vec<f64> = rows[..3].iter().map(|r| num(&r[1])).collect();
    assert_eq!(times, [0.0, 0.5, 1.0]);
}

#[test]
fn simulate_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--paths", "5", "--n", "256", "--seed", "7"];
    let a = run_to(dir.path(), "a.csv", &args);
    let b = run_to(dir.path(), "b.csv", &args);
    assert_eq!(a, b);
    let c = run_to(dir.path(), "c.csv", &["simulate", "--paths", "5", "--n", "256", "--seed", "8"]);
    assert_ne!(a, c);
}

#[test]
fn json_lines_parse() {
    let dir = tempfile::tempdir().unwrap();
    let text = run_to(dir.path(), "sim.jsonl", &["simulate", "--paths", "1", "--n", "4", "--format", "json-lines"]);
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[4]["t"].as_f64(), Some(1.0));
    assert_eq!(lines[0]["path_id"].as_u64(), Some(0));
}

#[test]
fn convergence_report_shape() {
    let dir = tempfile::tempdir().unwrap();
    let text = run_to(
        dir.path(),
        "conv.csv",
        &["convergence", "--paths", "4", "--n-list", "8,16,32,64,128", "--n-ref", "1024"],
    );
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,median_sup_error,q25,q75");
    assert_eq!(lines.len(), 7);
    for row in &lines[1..6] {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 4);
        let (q25, med, q75) = (num(fields[2]), num(fields[1]), num(fields[3]));
        assert!(q25 <= med && med <= q75);
    }
    let footer = lines[6];
    assert!(footer.starts_with("fitted_order="));
    let (order, r2) = footer.split_once(',').unwrap();
    num(order.trim_start_matches("fitted_order="));
    num(r2.trim_start_matches("r2="));
}

#[test]
fn positivity_mcstats_and_bracket_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let text = run_to(dir.path(), "pos.csv", &["positivity", "--paths", "20", "--n", "128"]);
    let (header, rows) = read_csv(&text);
    assert_eq!(header, ["n_paths", "min_z", "min_r", "feller_ok"]);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "20");
    assert_eq!(rows[0][3], "true");
    let (min_z, min_r) = (num(&rows[0][1]), num(&rows[0][2]));
    assert!((min_r - (min_z / 2.0).powi(2)).abs() <= f64::EPSILON * min_r);

    let text = run_to(dir.path(), "mc.csv", &["mcstats", "--paths", "50", "--n", "64", "--weight-fbm", "0"]);
    let (header, rows) = read_csv(&text);
    assert_eq!(header, ["t_eval", "sample_mean", "sample_se", "n_paths", "closed_form_mean"]);
    assert_eq!(num(&rows[0][0]), 1.0);
    assert!(num(&rows[0][4]) > 0.0);

    let text = run_to(dir.path(), "br.csv", &["bracket", "--paths", "3", "--n", "256", "--refinements", "1,16,256"]);
    let (header, rows) = read_csv(&text);
    assert_eq!(header, ["n", "refinement", "qv", "bracket_value"]);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1][0], "16");
    assert_eq!(rows[1][1], "16");
    assert_eq!(rows[2][0], "1");
}

#[test]
fn figure_preset_runs() {
    let dir = tempfile::tempdir().unwrap();
    let text = run_to(dir.path(), "fig.csv", &["simulate", "--preset", "figure1", "--paths", "2", "--n", "100"]);
    let (_, rows) = read_csv(&text);
    assert_eq!(rows.len(), 202);
    assert_eq!(num(&rows[100][1]), 10.0);
}

#[test]
fn config_errors_exit_two() {
    for args in [
        vec!["simulate", "--hurst", "0.4"],
        vec!["simulate", "--k", "0"],
        vec!["simulate", "--n", "abc"],
        vec!["simulate", "--bogus", "1"],
        vec!["convergence", "--sigma", "2", "--paths", "1"],
        vec!["convergence", "--n-list", "7", "--n-ref", "1024", "--paths", "1"],
    ] {
        let out = mfcir(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert_eq!(stderr.trim_end().lines().count(), if args[0] == "convergence" && args[1] == "--sigma" { 2 } else { 1 }, "{stderr}");
    }
}

#[test]
fn unknown_config_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "kappa = 2\n").unwrap();
    let out = mfcir(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kappa"));
}

#[test]
fn feller_warning_is_not_fatal_for_simulate() {
    let out = mfcir(&["simulate", "--sigma", "1.2", "--k", "0.5", "--theta", "1", "--paths", "1", "--n", "8"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning: Feller"));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 10);
}

#[test]
fn unwritable_output_exits_three() {
    let out = mfcir(&["simulate", "--paths", "1", "--n", "4", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn help_exits_zero() {
    let out = mfcir(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("convergence"));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_mfcir"))
            .args(["positivity", "--paths", "64", "--n", "512", "--out", out.to_str().unwrap()])
            .env("MFCIR_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("1", "one.csv"), run("4", "four.csv"));
    let bad = Command::new(env!("CARGO_BIN_EXE_mfcir"))
        .args(["simulate", "--paths", "1", "--n", "4"])
        .env("MFCIR_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
