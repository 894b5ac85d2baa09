use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn lz(args: &[&str], log: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lz"));
    cmd.args(args);
    match log {
        Some(level) => cmd.env("LZ_LOG", level),
        None => cmd.env_remove("LZ_LOG"),
    };
    cmd.output().expect("lz runs")
}

fn run_config(command: &str, config: &Path, extra: &[&str]) -> Output {
    let mut args = vec![command, "--config", config.to_str().unwrap()];
    args.extend_from_slice(extra);
    lz(&args, None)
}

/// Writes `config` into a fresh directory and returns both.
fn temp_config(config: Value) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, serde_json::to_string(&config).unwrap()).unwrap();
    (dir, path)
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "lz failed: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn small_contour() -> Value {
    json!({
        "schema_version": 1,
        "contour": { "w": [-1.0, 0.5], "alpha": [1.0, [1.5, 0.5]], "epsilon": 0.1, "r_max": [10.0, 100.0] }
    })
}

fn small_cc() -> Value {
    json!({
        "schema_version": 1,
        "model_file": data("models/torus_cylinder_small.json"),
        "test_function": { "f_hat": "exp(-1/((t-1)*(2-t)))", "support": [1.0, 2.0] },
        "lambdas": [4.0, 5.0, 6.0, 8.0],
        "order": 2
    })
}

// Input echoes, tolerances and diagnostics; every other number in a report
// must sit inside an {value|re|im, error} object.
const PLAIN_KEYS: &[&str] = &[
    "schema_version",
    "dim",
    "n",
    "k",
    "order",
    "point",
    "alpha0",
    "alpha",
    "w",
    "epsilon",
    "theta",
    "lambda",
    "r_max",
    "support",
    "scalar",
    "tolerance",
    "tail_tolerance",
    "identity_tolerance",
    "paths_tolerance",
    "leading",
    "subleading",
    "condition",
    "abs_error",
    "quadrature_error",
    "truncation_error",
];

fn bare_numbers(v: &Value, key: &str, path: String, out: &mut Vec<String>) {
    match v {
        Value::Object(map) => {
            let numeric = ["value", "re", "im"].iter().any(|k| map.get(*k).is_some_and(Value::is_number));
            if numeric && !map.get("error").is_some_and(Value::is_number) {
                out.push(format!("{path}: value without error"));
            }
            for (k, child) in map {
                if numeric && ["value", "re", "im", "error"].contains(&k.as_str()) {
                    continue;
                }
                bare_numbers(child, k, format!("{path}/{k}"), out);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                bare_numbers(child, key, format!("{path}/{i}"), out);
            }
        }
        Value::Number(_) if !PLAIN_KEYS.contains(&key) => out.push(path),
        _ => {}
    }
}

#[test]
fn minkowski_curvature_is_zero() {
    let out = run_config("curvature", &data("configs/curvature_minkowski.json"), &[]);
    let v = json_of(&out);
    assert_eq!(v["command"], "curvature");
    assert_eq!(v["scalar"]["value"].as_f64(), Some(0.0));
    assert!(v["scalar"]["error"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["oracle"]["pass"], true);
}

#[test]
fn einstein_curvature_text_report() {
    let out = run_config("curvature", &data("configs/curvature_einstein.json"), &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("-6.0000000000"), "{text}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn malformed_metric_is_a_validation_error_with_location() {
    let out = run_config("curvature", &data("configs/curvature_malformed.json"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("line") && err.contains("column"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_key_is_rejected() {
    let (_d, cfg) = temp_config(json!({ "schema_version": 1, "benchmark": "minkowski", "colour": "blue" }));
    let out = run_config("curvature", &cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("colour"), "{}", stderr(&out));
}

#[test]
fn unknown_nested_key_is_rejected() {
    let (_d, cfg) = temp_config(json!({ "schema_version": 1, "benchmark": "minkowski", "tolerances": { "agreemnt": 1e-3 } }));
    assert_eq!(run_config("curvature", &cfg, &[]).status.code(), Some(2));
}

#[test]
fn schema_version_is_enforced() {
    let (_d, missing) = temp_config(json!({ "benchmark": "minkowski" }));
    assert_eq!(run_config("curvature", &missing, &[]).status.code(), Some(2));
    let (_d2, future) = temp_config(json!({ "schema_version": 2, "benchmark": "minkowski" }));
    assert_eq!(run_config("curvature", &future, &[]).status.code(), Some(2));
}

#[test]
fn command_mismatch_is_rejected() {
    let out = run_config("hadamard", &data("configs/contour_grid.json"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("contour-check"), "{}", stderr(&out));
}

#[test]
fn per_command_requirements() {
    let (_d, no_metric) = temp_config(json!({ "schema_version": 1 }));
    assert_eq!(run_config("hadamard", &no_metric, &[]).status.code(), Some(2));
    assert_eq!(run_config("contour-check", &no_metric, &[]).status.code(), Some(2));
    assert_eq!(run_config("cc-expansion", &no_metric, &[]).status.code(), Some(2));
    let (_d2, both) = temp_config(json!({
        "schema_version": 1,
        "benchmark": "minkowski",
        "metric_file": data("metrics/minkowski.json")
    }));
    assert_eq!(run_config("curvature", &both, &[]).status.code(), Some(2));
}

#[test]
fn wrong_point_dimension_is_rejected() {
    let (_d, cfg) = temp_config(json!({ "schema_version": 1, "benchmark": "minkowski", "point": [0.0, 0.0] }));
    assert_eq!(run_config("curvature", &cfg, &[]).status.code(), Some(2));
}

#[test]
fn missing_config_file_is_a_validation_error() {
    let out = lz(&["curvature", "--config", "/nonexistent/run.json"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_without_sweep_is_rejected() {
    let out = run_config("curvature", &data("configs/curvature_minkowski.json"), &["--format", "csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_cross_check_exits_3_after_writing_the_report() {
    let (_d, cfg) = temp_config(json!({
        "schema_version": 1,
        "benchmark": "einstein_static",
        "tolerances": { "agreement": 1e-300 }
    }));
    let out = run_config("curvature", &cfg, &[]);
    assert_eq!(out.status.code(), Some(3));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["oracle"]["pass"], false);
    assert!(stderr(&out).contains("check failed"));
}

#[test]
fn hadamard_order_zero_has_only_u0() {
    let v = json_of(&run_config("hadamard", &data("configs/hadamard_minkowski_n0.json"), &[]));
    let coeffs = v["coefficients"].as_array().unwrap();
    assert_eq!(coeffs.len(), 1);
    assert_eq!(coeffs[0]["k"], 0);
    assert_eq!(coeffs[0]["u"]["value"].as_f64(), Some(1.0));
}

#[test]
fn hadamard_u1_matches_curvature_on_perturbed_metric() {
    let out = run_config("hadamard", &data("configs/hadamard_poly.json"), &[]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn zeta_residue_matches_prediction_on_einstein_universe() {
    let v = json_of(&run_config("zeta-residue", &data("configs/zeta_residue_einstein.json"), &[]));
    let expected = 1.0 / (16.0 * std::f64::consts::PI.powi(2));
    for key in ["residue_parametrix", "residue_mode_sum"] {
        let r = &v[key];
        assert!((r["im"].as_f64().unwrap() - expected).abs() <= 1e-3 * expected, "{key}: {r}");
        assert!(r["re"].as_f64().unwrap().abs() <= 1e-3 * expected, "{key}: {r}");
        assert!(r["error"].as_f64().unwrap() <= 1e-3 * expected, "{key}: {r}");
    }
}

#[test]
fn zeta_residue_without_model_warns() {
    let out = run_config("zeta-residue", &data("configs/zeta_residue_no_model.json"), &[]);
    assert!(out.status.success());
    assert!(stderr(&out).contains("model_file"), "{}", stderr(&out));
    let v = json_of(&out);
    assert!(v["residue_mode_sum"].is_null() && v["model"].is_null());
}

#[test]
fn log_level_comes_from_environment() {
    let cfg = data("configs/zeta_residue_no_model.json");
    let args = ["zeta-residue", "--config", cfg.to_str().unwrap()];
    let quiet = lz(&args, Some("error"));
    assert!(quiet.status.success());
    assert!(!stderr(&quiet).contains("WARN"), "{}", stderr(&quiet));
    let chatty = lz(&args, Some("info"));
    assert!(stderr(&chatty).contains("INFO"), "{}", stderr(&chatty));
}

#[test]
fn contour_csv_has_grid_and_sweep_rows() {
    let (_d, cfg) = temp_config(small_contour());
    let out = run_config("contour-check", &cfg, &["--format", "csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let header = reader.headers().unwrap().clone();
    assert!(header.iter().any(|h| h == "error_estimate"));
    let kinds: Vec<String> = reader.records().map(|r| r.unwrap()[0].to_string()).collect();
    assert_eq!(kinds.iter().filter(|k| *k == "grid").count(), 4);
    assert_eq!(kinds.iter().filter(|k| *k == "sweep").count(), 8);
}

#[test]
fn cc_expansion_csv_is_the_lambda_sweep() {
    let (_d, cfg) = temp_config(small_cc());
    let out = run_config("cc-expansion", &cfg, &["--format", "csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let lambdas: Vec<f64> = reader.records().map(|r| r.unwrap()[0].parse().unwrap()).collect();
    assert_eq!(lambdas, vec![4.0, 5.0, 6.0, 8.0]);
}

#[test]
fn every_reported_number_carries_an_error() {
    let (_d1, contour) = temp_config(small_contour());
    let (_d2, cc) = temp_config(small_cc());
    let runs = [
        ("curvature", data("configs/curvature_einstein.json")),
        ("hadamard", data("configs/hadamard_poly.json")),
        ("zeta-residue", data("configs/zeta_residue_einstein.json")),
        ("contour-check", contour),
        ("cc-expansion", cc),
    ];
    for (command, cfg) in runs {
        let v = json_of(&run_config(command, &cfg, &["--format", "json"]));
        let mut bare = Vec::new();
        bare_numbers(&v, "", String::new(), &mut bare);
        assert!(bare.is_empty(), "{command}: {bare:?}");
    }
}

#[test]
fn json_output_is_deterministic() {
    let cfg = data("configs/zeta_residue_einstein.json");
    let a = run_config("zeta-residue", &cfg, &[]);
    let b = run_config("zeta-residue", &cfg, &["--threads", "1"]);
    let c = run_config("zeta-residue", &cfg, &["--threads", "3"]);
    assert!(a.status.success() && b.status.success() && c.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.json");
    let out = run_config(
        "curvature",
        &data("configs/curvature_minkowski.json"),
        &["--out", target.to_str().unwrap()],
    );
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(target).unwrap()).unwrap();
    assert_eq!(v["metric"], "minkowski");
}

#[test]
fn zero_threads_is_a_usage_error() {
    let out = run_config("curvature", &data("configs/curvature_minkowski.json"), &["--threads", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn shipped_configs_validate() {
    for entry in std::fs::read_dir(data("configs")).unwrap() {
        let path = entry.unwrap().path();
        let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(v["schema_version"], 1, "{}", path.display());
    }
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(data("../schema/config.schema.json")).unwrap()).unwrap();
    assert_eq!(schema["properties"]["schema_version"]["const"], 1);
    assert_eq!(schema["additionalProperties"], false);
}
