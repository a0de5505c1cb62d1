use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

fn bin(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_poisson-wavelets"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .env_remove("POISSON_WAVELETS_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn verify_fast_passes() {
    let dir = TempDir::new().unwrap();
    let out = bin(dir.path(), &["verify", "--n", "2", "--m", "1", "--fast"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let printed: Value = serde_json::from_slice(&out.stdout).unwrap();
    let written = read_json(&dir.path().join("verify.json"));
    assert_eq!(printed, written);
    assert_eq!(written["passed"], Value::Bool(true));
    let modules: std::collections::BTreeSet<_> =
        written["suites"].as_array().unwrap().iter().map(|s| s["module"].as_str().unwrap().to_owned()).collect();
    for module in ["special_functions", "kernels", "coefficients", "quadrature", "wavelets", "transform", "asymptotics"] {
        assert!(modules.contains(module), "missing suites for {module}");
    }
}

#[test]
fn coeffs_symbolic_base_case() {
    let dir = TempDir::new().unwrap();
    let out = bin(dir.path(), &["coeffs", "--m", "3", "--symbolic-n"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = read_json(&dir.path().join("coeffs.json"));
    assert_eq!(doc["schema_version"], 1);
    let alpha: Vec<Vec<i64>> = doc["alpha"]
        .as_array()
        .unwrap()
        .iter()
        .map(|row| row["values"].as_array().unwrap().iter().map(|v| v.as_i64().unwrap()).collect())
        .collect();
    assert_eq!(alpha, vec![vec![1], vec![0, 1], vec![0, 1, 1], vec![0, 1, 3, 1]]);
    let first = &doc["r_tables"][0];
    assert_eq!(first["order"], 1);
    assert_eq!(first["rows"][0]["a"], serde_json::json!(["-n - 3", "n - 1"]));
    assert_eq!(first["rows"][1]["a"], serde_json::json!(["n + 1", "-n + 3"]));
}

#[test]
fn coeffs_fixed_dimension_matches_symbolic() {
    let dir = TempDir::new().unwrap();
    bin(dir.path(), &["coeffs", "--m", "2", "--symbolic-n", "--output", "sym.json"]);
    bin(dir.path(), &["coeffs", "--m", "2", "--n", "4", "--output", "fixed.json"]);
    let sym = read_json(&dir.path().join("sym.json"));
    let fixed = read_json(&dir.path().join("fixed.json"));
    for (s_table, f_table) in sym["r_tables"].as_array().unwrap().iter().zip(fixed["r_tables"].as_array().unwrap()) {
        for (s_row, f_row) in s_table["rows"].as_array().unwrap().iter().zip(f_table["rows"].as_array().unwrap()) {
            for (s_poly, f_poly) in s_row["polynomials"].as_array().unwrap().iter().zip(f_row["polynomials"].as_array().unwrap()) {
                let at_four: i64 = s_poly
                    .as_array()
                    .unwrap()
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c.as_i64().unwrap() * 4i64.pow(j as u32))
                    .sum();
                assert_eq!(f_poly.as_array().unwrap(), &vec![Value::from(at_four)]);
            }
        }
    }
}

#[test]
fn eval_all_representations_agree() {
    let dir = TempDir::new().unwrap();
    let out = bin(dir.path(), &["eval", "--n", "3", "--m", "2", "--a", "0.1", "--theta-grid", "50", "--repr", "all"]);
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_path(dir.path().join("eval.csv")).unwrap();
    assert_eq!(
        reader.headers().unwrap(),
        vec!["theta", "value", "series", "closed", "continuation", "multipole", "max_pairwise_rel_err"]
    );
    let mut rows = 0;
    for record in reader.records() {
        let record = record.unwrap();
        let gap: f64 = record[6].parse().unwrap();
        assert!(gap <= 1e-9, "{gap}");
        rows += 1;
    }
    assert_eq!(rows, 50);
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let runs = [
        vec!["invert", "--random", "8", "--seed", "3", "--n", "2", "--m", "1", "--scales", "100", "--output", "X"],
        vec!["transform", "--random", "5", "--seed", "9", "--n", "3", "--m", "2", "--scales", "5", "--theta-grid", "7", "--output", "X"],
        vec!["euclid", "--n", "2", "--m", "1", "--s-count", "41", "--output", "X", "--profile", "X.csv"],
    ];
    for args in runs {
        let first: Vec<&str> = args.iter().map(|a| if *a == "X" { "one" } else { a }).collect();
        let second: Vec<&str> = args.iter().map(|a| if *a == "X" { "two" } else { a }).collect();
        assert_eq!(bin(dir.path(), &first).status.code(), Some(0), "{args:?}");
        assert_eq!(bin(dir.path(), &["--threads", "1"].iter().chain(&second).copied().collect::<Vec<_>>()).status.code(), Some(0));
        assert_eq!(fs::read(dir.path().join("one")).unwrap(), fs::read(dir.path().join("two")).unwrap(), "{args:?}");
    }
}

#[test]
fn invert_round_trip_report() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("f.json");
    fs::write(&input, r#"{"n": 3, "coeffs": [0.0, 1.0, -0.5, 0.25]}"#).unwrap();
    for (kind, path) in [("bilinear", "spectral"), ("linear", "samples")] {
        let out = bin(
            dir.path(),
            &["invert", "--input", input.to_str().unwrap(), "--m", "2", "--kind", kind, "--path", path],
        );
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let report = read_json(&dir.path().join("invert.json"));
        assert_eq!(report["transform"], kind);
        assert!(report["l2_error"].as_f64().unwrap() <= 1e-3);
        assert_eq!(report["per_degree_ratio"][0], Value::Null);
    }
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(bin(dir.path(), &["eval", "--n", "2", "--m", "1"]).status.code(), Some(2));
    assert_eq!(bin(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(bin(dir.path(), &["eval", "--n", "1", "--m", "1", "--a", "0.5"]).status.code(), Some(3));
    assert_eq!(bin(dir.path(), &["eval", "--n", "2", "--m", "1", "--a", "-0.5"]).status.code(), Some(3));
    assert_eq!(
        bin(dir.path(), &["invert", "--random", "4", "--n", "2", "--m", "1", "--kind", "linear", "--flavor", "bilinear"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(bin(dir.path(), &["transform", "--input", "missing.json", "--m", "1"]).status.code(), Some(4));
    assert_eq!(bin(dir.path(), &["--threads", "0", "verify", "--fast"]).status.code(), Some(3));
}

#[test]
fn out_dir_from_environment() {
    let dir = TempDir::new().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_poisson-wavelets"))
        .args(["coeffs", "--m", "1", "--n", "2"])
        .env("POISSON_WAVELETS_OUT_DIR", dir.path())
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(dir.path().join("coeffs.json").exists());
}

#[test]
fn in_process_entry_point() {
    let dir = TempDir::new().unwrap();
    let code = poisson_wavelets::cli::run([
        "poisson-wavelets",
        "--out-dir",
        dir.path().to_str().unwrap(),
        "eval",
        "--n",
        "2",
        "--m",
        "1",
        "--a",
        "1",
        "--theta-grid",
        "3",
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(dir.path().join("eval.csv")).unwrap();
    assert_eq!(text.lines().count(), 4);
}
