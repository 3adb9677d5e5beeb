//! End-to-end runs of the `fsacf` binary.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::sync::Arc;

use fsacf::{generate, Grid, ProcessSpec, Seed};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fsacf"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn fsacf")
}

fn run_with_stdin(args: &[&str], stdin: &[u8]) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn fsacf");
    child.stdin.take().unwrap().write_all(stdin).unwrap();
    child.wait_with_output().unwrap()
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}, stderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fsacf-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Parses `lag,rho,lower,upper` rows, skipping the header.
fn sacf_rows(csv: &str) -> Vec<(usize, f64, f64, f64)> {
    csv.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].parse().unwrap(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
                f[3].parse().unwrap(),
            )
        })
        .collect()
}

fn sine_csv(m: usize, copies: usize, scale: f64) -> String {
    let t: Vec<f64> = (0..m).map(|j| j as f64 / (m - 1) as f64).collect();
    let mut s = String::from("t");
    for v in &t {
        s.push_str(&format!(",{v:?}"));
    }
    s.push('\n');
    for i in 1..=copies {
        s.push_str(&i.to_string());
        for v in &t {
            s.push_str(&format!(",{:?}", scale * (2.0 * PI * v).sin()));
        }
        s.push('\n');
    }
    s
}

#[test]
fn simulated_white_noise_pipes_into_sacf() {
    let sim = ok(run(&[
        "simulate",
        "--process",
        "bb",
        "--n",
        "50",
        "--M",
        "101",
        "--seed",
        "7",
    ]));
    let out = ok(run_with_stdin(
        &["sacf", "--input", "-", "-H", "30", "--alpha", "0.05"],
        sim.as_bytes(),
    ));
    assert!(out.starts_with("lag,rho,lower,upper\n"));
    let rows = sacf_rows(&out);
    assert_eq!(rows.len(), 30);
    let outside = rows.iter().filter(|r| r.1 < r.2 || r.1 > r.3).count();
    // 1.5 exceedances expected at the 5% level.
    assert!(outside <= 5, "{outside} of 30 outside the band");
    for (k, r) in rows.iter().enumerate() {
        assert_eq!(r.0, k + 1);
        assert_eq!(r.2, -r.3);
    }
}

#[test]
fn supplied_zero_center_gives_one_half() {
    let dir = scratch("center");
    let data = dir.join("two.csv");
    let center = dir.join("zero.csv");
    std::fs::write(&data, sine_csv(101, 2, 1.0)).unwrap();
    std::fs::write(&center, sine_csv(101, 1, 0.0)).unwrap();
    let out = ok(run(&[
        "sacf",
        "--input",
        path_str(&data),
        "--center",
        path_str(&center),
        "-H",
        "1",
    ]));
    let rows = sacf_rows(&out);
    assert_eq!(rows.len(), 1);
    assert!((rows[0].1 - 0.5).abs() < 1e-12, "{}", rows[0].1);
}

#[test]
fn missing_input_is_a_usage_error() {
    let out = run(&["sacf", "-H", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("input"));
}

#[test]
fn out_of_range_alpha_names_the_flag() {
    let out = run(&["sacf", "--input", "-", "--alpha", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--alpha"));
}

#[test]
fn malformed_csv_reports_row_and_column() {
    let out = run_with_stdin(
        &["median", "--input", "-"],
        b"t,0,1\n1,0.5,0.25\n2,1.0,oops\n",
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 3") && err.contains("column 3"), "{err}");
}

#[test]
fn nonpositive_price_names_curve_and_point() {
    let out = run_with_stdin(
        &["transform", "--input", "-", "--kind", "cidr"],
        b"t,0,0.5,1\n1,10,11,12\n2,10,0,12\n",
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("curve 1") && err.contains("point 1"), "{err}");
}

#[test]
fn simulated_csv_round_trips_bit_for_bit() {
    let csv = ok(run(&[
        "simulate",
        "--process",
        "far1",
        "--S",
        "-0.5",
        "--n",
        "40",
        "--M",
        "51",
        "--seed",
        "42",
    ]));
    let parsed = fsacf::io::read_series(csv.as_bytes()).unwrap();
    let grid = Arc::new(Grid::uniform(51).unwrap());
    let direct = generate(&ProcessSpec::far1(-0.5), 40, &grid, Seed::new(42)).unwrap();
    assert_eq!(parsed.grid().points(), direct.grid().points());
    assert_eq!(parsed.len(), direct.len());
    for (a, b) in parsed.iter().zip(direct.iter()) {
        let a: Vec<u64> = a.values().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = b.values().iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b);
    }
}

#[test]
fn json_and_csv_carry_identical_numbers() {
    let dir = scratch("formats");
    let data = dir.join("fourier.csv");
    let sim = ok(run(&[
        "simulate",
        "--process",
        "fourier",
        "--n",
        "80",
        "--seed",
        "3",
    ]));
    std::fs::write(&data, sim).unwrap();
    let csv = ok(run(&[
        "sacf",
        "--input",
        path_str(&data),
        "-H",
        "6",
        "--format",
        "csv",
    ]));
    let json = ok(run(&[
        "sacf",
        "--input",
        path_str(&data),
        "-H",
        "6",
        "--format",
        "json",
    ]));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let rho: Vec<f64> = v["rho"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    let bound = v["bound"].as_f64().unwrap();
    let rows = sacf_rows(&csv);
    assert_eq!(v["H"], 6);
    assert_eq!(v["n"], 80);
    assert_eq!(rows.len(), rho.len());
    for (r, j) in rows.iter().zip(&rho) {
        assert_eq!(r.1.to_bits(), j.to_bits());
        assert_eq!(r.3.to_bits(), bound.to_bits());
    }

    let test_csv = ok(run(&["test", "--input", path_str(&data), "-H", "6"]));
    let last = test_csv.lines().last().unwrap();
    let fields: Vec<f64> = last.split(',').map(|f| f.parse().unwrap()).collect();
    assert_eq!(fields[1].to_bits(), v["Q"].as_f64().unwrap().to_bits());
    assert_eq!(fields[2].to_bits(), v["p"].as_f64().unwrap().to_bits());
}

#[test]
fn test_reports_each_requested_lag() {
    let sim = ok(run(&[
        "simulate",
        "--process",
        "bm",
        "--n",
        "60",
        "--seed",
        "1",
    ]));
    let out = ok(run_with_stdin(
        &["test", "--input", "-", "-H", "1,5,10"],
        sim.as_bytes(),
    ));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "H,Q,p");
    let hs: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(hs, ["1", "5", "10"]);
}

#[test]
fn fit_residuals_test_pipeline() {
    let dir = scratch("pipeline");
    let data = dir.join("far.csv");
    let sim = ok(run(&[
        "simulate",
        "--process",
        "far1",
        "--S",
        "0.5",
        "--n",
        "300",
        "--seed",
        "9",
    ]));
    std::fs::write(&data, &sim).unwrap();

    let summary = ok(run(&[
        "fit-fsar",
        "--input",
        path_str(&data),
        "--lags",
        "1,7",
        "--cpv",
        "0.9",
    ]));
    let v: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(v["lags"], serde_json::json!([1, 7]));
    let p = v["p"].as_u64().unwrap() as usize;
    assert_eq!(v["coefficients"].as_array().unwrap().len(), 2);
    assert_eq!(v["coefficients"][0].as_array().unwrap().len(), p);

    let res = ok(run(&[
        "residuals",
        "--input",
        path_str(&data),
        "--lags",
        "1",
    ]));
    let residuals = fsacf::io::read_series(res.as_bytes()).unwrap();
    assert_eq!(residuals.len(), 299);
    let out = ok(run_with_stdin(
        &["test", "--input", "-", "-H", "5"],
        res.as_bytes(),
    ));
    assert_eq!(out.lines().count(), 2);
}

#[test]
fn fpca_writes_three_tables() {
    let dir = scratch("fpca");
    let data = dir.join("g.csv");
    let sim = ok(run(&[
        "simulate",
        "--process",
        "gauss2",
        "--lambda1",
        "1",
        "--lambda2",
        "2",
        "--n",
        "200",
    ]));
    std::fs::write(&data, sim).unwrap();
    let outdir = dir.join("out");
    ok(run(&[
        "fpca",
        "--input",
        path_str(&data),
        "--outdir",
        path_str(&outdir),
    ]));
    let values = std::fs::read_to_string(outdir.join("eigenvalues.csv")).unwrap();
    assert!(values.starts_with("j,eigenvalue,cpv\n"));
    let functions =
        fsacf::io::read_series(std::fs::File::open(outdir.join("eigenfunctions.csv")).unwrap())
            .unwrap();
    assert_eq!(functions.len(), 2);
    let scores = std::fs::read_to_string(outdir.join("scores.csv")).unwrap();
    assert!(scores.starts_with("i,xi_1,xi_2\n"));
    assert_eq!(scores.lines().count(), 201);
}

#[test]
fn median_of_identical_curves_is_that_curve() {
    let out = ok(run_with_stdin(
        &["median", "--input", "-"],
        sine_csv(21, 3, 2.0).as_bytes(),
    ));
    let m = fsacf::io::read_series(out.as_bytes()).unwrap();
    let expected = fsacf::io::read_series(sine_csv(21, 1, 2.0).as_bytes()).unwrap();
    assert_eq!(m.len(), 1);
    assert!(m.curves()[0].max_abs_diff(&expected.curves()[0]) < 1e-9);
}

#[test]
fn mc_misfit_writes_cells_and_summary() {
    let dir = scratch("mc");
    let config = dir.join("misfit.toml");
    std::fs::write(&config, "s1 = 0.4\ns2 = 0.4\nn = 150\nreplications = 8\n").unwrap();
    let cells = dir.join("cells.csv");
    ok(run(&[
        "mc-misfit",
        "--config",
        path_str(&config),
        "--seed",
        "5",
        "--output",
        path_str(&cells),
    ]));
    let csv = std::fs::read_to_string(&cells).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "model,n,H,alpha,rejections,valid,failures,rate,se"
    );
    assert_eq!(lines.len(), 3);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("cells.json")).unwrap()).unwrap();
    assert_eq!(summary["replications"], 8);
    assert_eq!(summary["cells"].as_array().unwrap().len(), 2);
}

#[test]
fn mc_config_typo_is_a_usage_error() {
    let dir = scratch("typo");
    let config = dir.join("power.toml");
    std::fs::write(&config, "replicatons = 10\n").unwrap();
    let out = run(&["mc-power", "--config", path_str(&config)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("replicatons"));
}
