//! End-to-end tests of the `bandlimit` binary: artifact formats, exit
//! codes, and rerun determinism.

use std::path::Path;
use std::process::{Command, Output};

use bandlimit::{
    select_anchors, AnchorStrategy, KernelConfig, SupportSet, TrigPolynomial,
};

const BIN: &str = env!("CARGO_BIN_EXE_bandlimit");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect())
        .collect()
}

#[test]
fn sample_draws_on_surface_points() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    run_ok(&["sample", "--support", "3x3", "--n", "8", "--seed", "7", "--out-dir", out_dir]);

    let cloud = read(&dir.path().join("cloud.csv"));
    let rows = csv_rows(&cloud);
    assert_eq!(rows.len(), 8);
    assert!(cloud.lines().next().unwrap().starts_with("x1,x2"));

    // the emitted polynomial vanishes on every emitted row
    let poly: TrigPolynomial =
        serde_json::from_str(&read(&dir.path().join("poly.json"))).unwrap();
    for row in &rows {
        let residual = poly.evaluate(&[row[0], row[1]]).unwrap().norm();
        assert!(residual <= 1e-9, "residual {residual}");
    }
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn sample_union_labels_components() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    run_ok(&[
        "sample",
        "--product",
        "3x3,3x3",
        "--per-component",
        "8,16",
        "--seed",
        "3",
        "--out-dir",
        out_dir,
    ]);
    let cloud = read(&dir.path().join("cloud.csv"));
    assert!(cloud.lines().next().unwrap().ends_with(",component"));
    let rows = csv_rows(&cloud);
    assert_eq!(rows.len(), 24);
    assert_eq!(rows.iter().filter(|r| r[2] == 0.0).count(), 8);
    assert_eq!(rows.iter().filter(|r| r[2] == 1.0).count(), 16);
}

#[test]
fn sample_zero_points_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    run_ok(&["sample", "--support", "3x3", "--n", "0", "--seed", "1", "--out-dir", out_dir]);
    let cloud = read(&dir.path().join("cloud.csv"));
    assert_eq!(cloud.trim(), "x1,x2");
}

#[test]
fn sample_is_deterministic() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [&dir_a, &dir_b] {
        run_ok(&[
            "sample",
            "--support",
            "3x3",
            "--n",
            "12",
            "--seed",
            "9",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ]);
    }
    assert_eq!(read(&dir_a.path().join("cloud.csv")), read(&dir_b.path().join("cloud.csv")));
    assert_eq!(read(&dir_a.path().join("poly.json")), read(&dir_b.path().join("poly.json")));
}

fn write(path: &Path, contents: &str) {
    std::fs::write(path, contents).unwrap();
}

#[test]
fn recover_minimal_matches_truth_on_a_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    run_ok(&["sample", "--support", "3x3", "--n", "8", "--seed", "11", "--out-dir", out_dir]);
    let truth: TrigPolynomial =
        serde_json::from_str(&read(&dir.path().join("poly.json"))).unwrap();

    let lambda = dir.path().join("lambda.json");
    write(&lambda, r#"{"kind":"rect","lo":[-1,-1],"hi":[1,1]}"#);
    let model = dir.path().join("model.json");
    let grid = dir.path().join("grid.csv");
    run_ok(&[
        "recover",
        "--cloud",
        dir.path().join("cloud.csv").to_str().unwrap(),
        "--gamma",
        lambda.to_str().unwrap(),
        "--lambda",
        lambda.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--grid",
        "50",
        "--grid-out",
        grid.to_str().unwrap(),
        "--out-dir",
        out_dir,
    ]);

    let parsed: serde_json::Value = serde_json::from_str(&read(&model)).unwrap();
    assert_eq!(parsed["kind"], "minimal");
    let recovered: TrigPolynomial = serde_json::from_value(parsed["poly"].clone()).unwrap();

    // grid rows carry |ψ_rec|; the zero contour must match the truth: the
    // recovered sign pattern (up to one global sign) agrees wherever the
    // truth is clearly away from its contour
    let rows = csv_rows(&read(&grid));
    assert_eq!(rows.len(), 2500);
    let max_amp = rows
        .iter()
        .map(|r| truth.evaluate(&[r[0], r[1]]).unwrap().re.abs())
        .fold(0.0_f64, f64::max);
    let global_sign = {
        let r = &rows[0];
        let t = truth.evaluate(&[r[0], r[1]]).unwrap().re;
        let e = recovered.evaluate(&[r[0], r[1]]).unwrap().re;
        (t * e).signum()
    };
    let mut away = 0usize;
    let mut agree = 0usize;
    for r in &rows {
        let t = truth.evaluate(&[r[0], r[1]]).unwrap().re;
        if t.abs() < 0.05 * max_amp {
            continue; // near the contour
        }
        away += 1;
        let e = recovered.evaluate(&[r[0], r[1]]).unwrap().re;
        if (global_sign * t * e) > 0.0 {
            agree += 1;
        }
        // and the emitted grid magnitude matches the recovered polynomial
        assert!((e.abs() - r[2]).abs() <= 1e-9 * max_amp.max(1.0));
    }
    assert!(away > 1000);
    assert!(agree as f64 >= 0.999 * away as f64, "{agree}/{away} cells agree");
}

#[test]
fn recover_aggregate_reports_null_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    run_ok(&["sample", "--support", "3x3", "--n", "40", "--seed", "13", "--out-dir", out_dir]);
    let gamma = dir.path().join("gamma.json");
    write(&gamma, r#"{"kind":"rect","lo":[-2,-2],"hi":[2,2]}"#);
    let model = dir.path().join("model.json");
    run_ok(&[
        "recover",
        "--cloud",
        dir.path().join("cloud.csv").to_str().unwrap(),
        "--gamma",
        gamma.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--out-dir",
        out_dir,
    ]);
    let parsed: serde_json::Value = serde_json::from_str(&read(&model)).unwrap();
    assert_eq!(parsed["kind"], "aggregate");
    // 5×5 ⊖ 3×3 leaves the 3×3 block of shifts
    assert_eq!(parsed["null_dim"], 9);
    assert_eq!(parsed["rank"], 16);
}

#[test]
fn denoise_published_torus_parameters_log_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    run_ok(&[
        "sample", "--support", "3x3x3", "--n", "200", "--seed", "17", "--out-dir", out_dir,
    ]);
    let kernel = dir.path().join("kernel.json");
    write(&kernel, r#"{"kind":"rect","lo":[-3,-3,-3],"hi":[3,3,3]}"#);
    let clean = dir.path().join("clean.csv");
    let log = dir.path().join("metrics.csv");
    run_ok(&[
        "denoise",
        "--cloud",
        dir.path().join("cloud.csv").to_str().unwrap(),
        "--kernel",
        kernel.to_str().unwrap(),
        "--lambda",
        "0.8",
        "--iters",
        "3",
        "--out",
        clean.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
        "--out-dir",
        out_dir,
    ]);
    let metrics = read(&log);
    assert_eq!(metrics.lines().next().unwrap(), "iteration,objective,surrogate,mean_displacement");
    assert_eq!(csv_rows(&metrics).len(), 3);
    assert_eq!(csv_rows(&read(&clean)).len(), 200);
}

#[test]
fn phase_transition_table_shows_the_threshold_jump() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.json");
    let support = SupportSet::centered_rect(&[3, 3]).unwrap();
    write(
        &config,
        &serde_json::to_string(&serde_json::json!({
            "factor_supports": [support],
            "counts": [[7], [8]],
            "trials": 20,
            "seed": 5
        }))
        .unwrap(),
    );
    let table = dir.path().join("table.csv");
    run_ok(&[
        "phase-transition",
        "--config",
        config.to_str().unwrap(),
        "--out",
        table.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    let text = read(&table);
    assert_eq!(text.lines().next().unwrap(), "N,trials,successes,fraction");
    let rows = csv_rows(&text);
    assert_eq!(rows[0][..2], [7.0, 20.0]);
    assert_eq!(rows[0][3], 0.0);
    assert_eq!(rows[1][..2], [8.0, 20.0]);
    assert_eq!(rows[1][3], 1.0);
}

#[test]
fn fit_and_eval_reproduce_a_band_limited_function() {
    let dir = tempfile::tempdir().unwrap();
    let curve = TrigPolynomial::random_real(&SupportSet::centered_rect(&[3, 3]).unwrap(), 19)
        .unwrap();
    let fn_support = SupportSet::centered_rect(&[7, 7]).unwrap();
    let beta = TrigPolynomial::random_real(&fn_support, 20).unwrap();
    let kernel_cfg = KernelConfig::centered_rect(&[7, 7]).unwrap();

    // anchors: greedy-conditioned pick of rank-many (24) points
    let pool = curve.sample_zero_set(96, 21).unwrap();
    let anchors =
        select_anchors(&pool, 24, AnchorStrategy::GreedyConditioning, &kernel_cfg, 0).unwrap();
    let mut anchors_csv = String::from("x1,x2\n");
    for p in anchors.points() {
        anchors_csv.push_str(&format!("{},{}\n", p[0], p[1]));
    }
    write(&dir.path().join("anchors.csv"), &anchors_csv);

    let train = curve.sample_zero_set(150, 22).unwrap();
    let mut pairs = String::from("x1,x2,f1_re,f1_im\n");
    for p in train.points() {
        let v = beta.evaluate(p).unwrap();
        pairs.push_str(&format!("{},{},{},{}\n", p[0], p[1], v.re, v.im));
    }
    write(&dir.path().join("pairs.csv"), &pairs);
    let kernel = dir.path().join("kernel.json");
    write(&kernel, &serde_json::to_string(&kernel_cfg).unwrap());

    let model = dir.path().join("model.json");
    run_ok(&[
        "fit-fn",
        "--train",
        dir.path().join("pairs.csv").to_str().unwrap(),
        "--anchors",
        dir.path().join("anchors.csv").to_str().unwrap(),
        "--kernel",
        kernel.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);

    let fresh = curve.sample_zero_set(50, 23).unwrap();
    let mut query = String::from("x1,x2\n");
    for p in fresh.points() {
        query.push_str(&format!("{},{}\n", p[0], p[1]));
    }
    write(&dir.path().join("query.csv"), &query);
    let values = dir.path().join("values.csv");
    run_ok(&[
        "eval-fn",
        "--model",
        model.to_str().unwrap(),
        "--points",
        dir.path().join("query.csv").to_str().unwrap(),
        "--out",
        values.to_str().unwrap(),
        "--projection",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);

    let text = read(&values);
    assert_eq!(text.lines().next().unwrap(), "x1,x2,f1_re,f1_im,projection_error");
    let tol = 1e-5 * beta.coeff_norm();
    for row in csv_rows(&text) {
        let expected = beta.evaluate(&[row[0], row[1]]).unwrap();
        let err = ((row[2] - expected.re).powi(2) + (row[3] - expected.im).powi(2)).sqrt();
        assert!(err <= tol, "evaluation error {err}");
        // the coordinate map is only approximately band-limited on the
        // curve, so the on-curve reconstruction valley is small, not zero
        assert!(row[4] <= 1e-2, "on-curve projection error {}", row[4]);
    }
}

#[test]
fn exit_codes_distinguish_failure_classes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();

    // usage: unknown flag
    assert_eq!(run(&["sample", "--does-not-exist"]).status.code(), Some(1));
    // usage: no generator given
    assert_eq!(run(&["sample", "--n", "4", "--out-dir", out_dir]).status.code(), Some(1));

    // domain: missing input file
    let missing = run(&[
        "recover",
        "--cloud",
        "no-such-file.csv",
        "--gamma",
        "no-such-file.json",
        "--out",
        dir.path().join("m.json").to_str().unwrap(),
    ]);
    assert_eq!(missing.status.code(), Some(2));

    // domain: malformed CSV reports the offending line
    let bad = dir.path().join("bad.csv");
    write(&bad, "x1,x2\n0.5,0.5\n0.1,oops\n");
    let gamma = dir.path().join("gamma.json");
    write(&gamma, r#"{"kind":"rect","lo":[-1,-1],"hi":[1,1]}"#);
    let parse = run(&[
        "recover",
        "--cloud",
        bad.to_str().unwrap(),
        "--gamma",
        gamma.to_str().unwrap(),
        "--out",
        dir.path().join("m.json").to_str().unwrap(),
    ]);
    assert_eq!(parse.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&parse.stderr).contains(":3:"));

    // numerical: too few samples leave the minimal recovery ambiguous
    run_ok(&["sample", "--support", "3x3", "--n", "3", "--seed", "29", "--out-dir", out_dir]);
    let ambiguous = run(&[
        "recover",
        "--cloud",
        dir.path().join("cloud.csv").to_str().unwrap(),
        "--gamma",
        gamma.to_str().unwrap(),
        "--lambda",
        gamma.to_str().unwrap(),
        "--out",
        dir.path().join("m.json").to_str().unwrap(),
        "--out-dir",
        out_dir,
    ]);
    assert_eq!(ambiguous.status.code(), Some(3));
}

#[test]
fn manifest_captures_the_resolved_run() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    run_ok(&["sample", "--support", "3x3", "--n", "5", "--seed", "31", "--out-dir", out_dir]);
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("manifest.json"))).unwrap();
    assert_eq!(manifest["command"], "sample");
    assert_eq!(manifest["args"]["seed"], 31);
    assert_eq!(manifest["args"]["n"], 5);
    assert!(manifest["version"].is_string());
}
