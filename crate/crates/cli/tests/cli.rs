use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fraccalc")).args(args).output().expect("binary runs")
}

fn write_csv(path: &Path, xs: &[f64], f: impl Fn(f64) -> f64) {
    let mut s = String::from("x,value\n");
    for &x in xs {
        s += &format!("{x:.17e},{:.17e}\n", f(x));
    }
    std::fs::write(path, s).unwrap();
}

fn read_rows(text: &str) -> Vec<(f64, f64)> {
    text.lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect()
}

fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

#[test]
fn rl_derivative_of_constant() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("const.csv");
    write_csv(&input, &grid(1025), |_| 3.0);
    let out = run(&["compute", "--op", "rl-deriv", "--dir", "left", "--alpha", "0.5", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows = read_rows(&String::from_utf8(out.stdout).unwrap());
    assert!(rows[0].1.is_nan(), "anchor row is NaN-marked");
    let gamma_half = std::f64::consts::PI.sqrt();
    for &(x, v) in &rows[1..] {
        let exact = 3.0 * x.powf(-0.5) / gamma_half;
        assert!(((v - exact) / exact).abs() < 1e-3, "{x}: {v} vs {exact}");
    }
    assert!(String::from_utf8(out.stderr).unwrap().contains("NaN"));
}

#[test]
fn integral_of_order_one_is_antiderivative() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("lin.csv");
    let output = dir.path().join("out.csv");
    write_csv(&input, &grid(33), |x| 2.0 * x);
    let out = run(&[
        "compute",
        "--op",
        "integral",
        "--sigma",
        "1.0",
        "--input",
        input.to_str().unwrap(),
        "--output",
        output.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    for (x, v) in read_rows(&std::fs::read_to_string(&output).unwrap()) {
        assert!((v - x * x).abs() < 1e-14, "{x}: {v}");
    }
}

#[test]
fn out_of_range_order_points_to_decompose() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("sq.csv");
    write_csv(&input, &grid(65), |x| x * x);
    let out = run(&["compute", "--op", "rl-deriv", "--alpha", "1.5", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("--op decompose"));
    let ok = run(&["compute", "--op", "decompose", "--alpha", "1.5", "--input", input.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn usage_and_parse_errors() {
    assert_eq!(run(&["compute", "--op", "nope", "--input", "x.csv"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--suite", "nope"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "x,value\n0,1\n0.5,oops\n1,2\n").unwrap();
    let out = run(&["compute", "--op", "integral", "--sigma", "0.5", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let missing = dir.path().join("missing.csv");
    assert_eq!(run(&["compute", "--op", "integral", "--sigma", "0.5", "--input", missing.to_str().unwrap()]).status.code(), Some(3));
    // integral without --sigma
    assert_eq!(run(&["compute", "--op", "integral", "--input", bad.to_str().unwrap()]).status.code(), Some(3));
    let good = dir.path().join("good.csv");
    write_csv(&good, &grid(9), |x| x);
    assert_eq!(run(&["compute", "--op", "integral", "--input", good.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn verify_json_is_sorted_and_deterministic() {
    let a = run(&["verify", "--suite", "ibp", "--alpha", "1.0", "--json"]);
    assert_eq!(a.status.code(), Some(0));
    let b = run(&["verify", "--suite", "ibp", "--alpha", "1.0", "--json"]);
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["suite"], "ibp");
    assert_eq!(v["alpha"], 1.0);
    let cases = v["cases"].as_array().unwrap();
    let names: Vec<&str> = cases.iter().map(|c| c["name"].as_str().unwrap()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    for c in cases {
        for key in ["residual", "tolerance", "measured_order", "pass", "warnings"] {
            assert!(c.get(key).is_some(), "missing {key}");
        }
        assert_eq!(c["pass"], c["residual"].as_f64().unwrap() <= c["tolerance"].as_f64().unwrap());
    }
}

#[test]
fn failing_case_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = run(&["verify", "--suite", "semigroup", "--tol", "1e-12", "--output", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(v["cases"].as_array().unwrap().iter().any(|c| c["pass"] == false));
}

#[test]
fn weak_step_suite_passes() {
    let out = run(&["verify", "--suite", "weak-step"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn apply_delta_and_its_derivative() {
    let out = run(&["apply", "--dist", r#"{"kind":"delta","x0":0.0}"#, "--center", "0.0", "--radius", "1.0"]);
    assert_eq!(out.status.code(), Some(0));
    let v: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((v - (-1.0f64).exp()).abs() < 1e-15);

    // a left derivative of the delta vanishes on probes left of 0
    let d = r#"{"kind":"derived","dir":"left","alpha":0.5,"of":{"kind":"delta","x0":0.0}}"#;
    let out = run(&["apply", "--dist", d, "--center", "-0.6", "--radius", "0.5"]);
    let v: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert_eq!(v, 0.0);

    let dir = tempfile::tempdir().unwrap();
    write_csv(&dir.path().join("one.csv"), &[-1.0, 0.0, 1.0], |_| 1.0);
    let desc = dir.path().join("reg.json");
    std::fs::write(&desc, r#"{"kind":"regular","csv":"one.csv"}"#).unwrap();
    let out = run(&["apply", "--dist", desc.to_str().unwrap(), "--center", "0.0", "--radius", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let v: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    // int of the bump of radius 0.5 is 0.5 times the unit bump's mass
    assert!((v - 0.5 * 0.443_993_816_168_079_4).abs() < 1e-9);

    assert_eq!(run(&["apply", "--dist", "{not json", "--center", "0", "--radius", "1"]).status.code(), Some(3));
}

#[test]
fn json_compute_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("u.csv");
    write_csv(&input, &grid(17), |x| x);
    let out = run(&["compute", "--op", "weak", "--alpha", "0.5", "--input", input.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["value"][0].is_null());
    assert_eq!(v["x"].as_array().unwrap().len(), 17);
    assert!(v["warnings"][0].as_str().unwrap().contains("heuristic"));
}
