//! End-to-end runs of [`run`] on temporary config files.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::*;
use crate::blocking::NegligibilityReport;
use crate::mixing::ProfileEstimate;
use crate::stats::{CltReport, MillerReport};

struct Output {
    code: i32,
    stdout: Vec<u8>,
    stderr: Vec<u8>,
}

fn specfield(args: &[&str]) -> Output {
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let code = run(std::iter::once("specfield").chain(args.iter().copied()), &mut stdout, &mut stderr);
    Output { code, stdout, stderr }
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn ma1_spec(dim: usize) -> Value {
    let mut second = vec![0; dim];
    second[0] = 1;
    json!({
        "dim": dim,
        "taps": [{"lag": vec![0; dim], "re": 1.0}, {"lag": second, "re": 1.0}],
        "innovation_kind": "real-gaussian",
        "innovation_std": 1.0
    })
}

fn clt_config(seed: u64, delta: f64) -> Value {
    json!({
        "spec": {"dim": 2, "taps": [{"lag": [0, 0], "re": 1.0}], "innovation_kind": "circular-complex-gaussian", "innovation_std": 1.0},
        "dims": [16, 16],
        "scheme": {"base": [FRAC_PI_2, FRAC_PI_2], "m": 2, "delta": delta, "axis": 1},
        "R": 300,
        "seed": seed
    })
}

#[test]
fn help_version_and_usage() {
    let out = specfield(&["--help"]);
    assert_eq!(out.code, 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for sub in ["kernels", "periodogram", "expectation", "covariance", "clt-experiment", "miller", "blocking-plan", "negligibility", "mixing-estimate"] {
        assert!(text.contains(sub), "help lacks {sub}");
    }
    let out = specfield(&["--version"]);
    assert_eq!(out.code, 0);
    assert!(String::from_utf8(out.stdout).unwrap().contains(env!("CARGO_PKG_VERSION")));
    let out = specfield(&["transmogrify"]);
    assert_eq!(out.code, 64);
    assert!(String::from_utf8(out.stderr).unwrap().contains("Usage"));
}

#[test]
fn clt_report_has_every_field_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "cfg.json", &clt_config(5, 0.25));
    let report = dir.path().join("report.json");
    let csv = dir.path().join("raw.csv");
    let out = specfield(&["clt-experiment", "--config", path_str(&config), "--out", path_str(&report), "--csv", path_str(&csv)]);
    assert_eq!(out.code, 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&report).unwrap();
    let value: Value = serde_json::from_str(&text).unwrap();
    for key in [
        "replications", "seed", "dims", "frequencies", "spectral_density", "target_variance", "covariance",
        "max_covariance_error", "coordinate_means", "coordinate_mean_std_errors", "coordinate_ks",
        "periodogram_means", "periodogram_mean_std_errors", "periodogram_ks", "max_cross_frequency_correlation",
    ] {
        assert!(value.get(key).is_some(), "report lacks {key}");
    }
    let parsed: CltReport = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed.replications, 300);
    assert_eq!(parsed.covariance.len(), 4);
    assert!(parsed.coordinate_ks.iter().all(|k| (0.0..=1.0).contains(&k.p_value)));

    let raw = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(raw.lines().next().unwrap(), "rep,re_1,im_1,re_2,im_2,I_1,I_2");
    assert_eq!(raw.lines().count(), 301);

    let again = dir.path().join("again.json");
    specfield(&["clt-experiment", "--config", path_str(&config), "--out", path_str(&again)]);
    assert_eq!(std::fs::read(&report).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn report_goes_to_stdout_without_out() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "cfg.json", &clt_config(1, 0.25));
    let out = specfield(&["clt-experiment", "--config", path_str(&config)]);
    assert_eq!(out.code, 0);
    let _: CltReport = serde_json::from_slice(&out.stdout).unwrap();
}

#[test]
fn bad_delta_names_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "cfg.json", &clt_config(1, 0.7));
    let out = specfield(&["clt-experiment", "--config", path_str(&config)]);
    assert_eq!(out.code, 1);
    assert!(String::from_utf8(out.stderr).unwrap().contains("0 < delta < 1/2"));
}

#[test]
fn malformed_json_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\n  \"spec\": {\n    \"dim\": 2,,\n  }\n}\n").unwrap();
    let out = specfield(&["clt-experiment", "--config", path_str(&path)]);
    assert_eq!(out.code, 1);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 3") && err.contains("column"), "{err}");
}

#[test]
fn degenerate_density_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = clt_config(1, 0.25);
    cfg["spec"]["innovation_std"] = json!(0.0);
    let config = write(dir.path(), "cfg.json", &cfg);
    let out = specfield(&["clt-experiment", "--config", path_str(&config)]);
    assert_eq!(out.code, 1);
    assert!(String::from_utf8(out.stderr).unwrap().contains("degenerate"));
}

#[test]
fn thread_override_is_validated() {
    assert!(thread_pool(Some("zero".into())).is_err());
    assert!(thread_pool(Some("0".into())).is_err());
    assert_eq!(thread_pool(Some("3".into())).unwrap().current_num_threads(), 3);
    assert!(thread_pool(None).is_ok());
}

#[test]
fn kernels_periodogram_and_covariance() {
    let out = specfield(&["kernels", "--alpha", "0.0", "--n", "7"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["fejer"].as_f64().unwrap(), 7.0);

    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "spec.json", &ma1_spec(1));
    let out = specfield(&["periodogram", "--spec", path_str(&spec), "--dims", "16", "--lambda", "0.5", "--seed", "3"]);
    assert_eq!(out.code, 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let s = (v["sum"]["re"].as_f64().unwrap(), v["sum"]["im"].as_f64().unwrap());
    assert!(((s.0 * s.0 + s.1 * s.1) / 16.0 - v["periodogram"].as_f64().unwrap()).abs() < 1e-12);

    let out = specfield(&["covariance", "--spec", path_str(&spec), "--dims", "16", "--lambda", "1.5707963267948966", "--mu", "1.5707963267948966"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    // E S S / V = 2i/v at λ = μ = π/2
    assert!(v["product"]["re"].as_f64().unwrap().abs() < 1e-12);
    assert!((v["product"]["im"].as_f64().unwrap().abs() - 2.0 / 16.0).abs() < 1e-12);
}

#[test]
fn expectation_point_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "spec.json", &ma1_spec(1));
    let out = specfield(&["expectation", "--spec", path_str(&spec), "--dims", "2", "--lambda", "0", "--quadrature"]);
    assert_eq!(out.code, 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["exact"].as_f64().unwrap() - 3.0).abs() < 1e-12);
    assert!((v["quadrature"].as_f64().unwrap() - 3.0).abs() < 1e-12);

    let csv = dir.path().join("sup.csv");
    let out = specfield(&["expectation", "--spec", path_str(&spec), "--sequence", "8,16", "--grid", "128", "--out", path_str(&csv)]);
    assert_eq!(out.code, 0);
    let text = std::fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,v,sup_err");
    assert!(lines[1].starts_with("1,8,"));
    let sup: f64 = lines[1].rsplit(',').next().unwrap().parse().unwrap();
    assert!((sup - 0.25).abs() < 1e-12);
}

#[test]
fn mixing_estimate_feeds_blocking_plan() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "spec.json", &ma1_spec(1));
    let profile = dir.path().join("profile.json");
    let out = specfield(&["mixing-estimate", "--spec", path_str(&spec), "--window", "3", "--set-size", "2", "--n-max", "5", "--out", path_str(&profile)]);
    assert_eq!(out.code, 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&profile).unwrap();
    let est: ProfileEstimate = serde_json::from_str(&text).unwrap();
    assert!(est.values[&1] >= 0.5);
    let _: MixingProfile = serde_json::from_str(&text).unwrap();

    let out = specfield(&["blocking-plan", "--v1", "1000", "--profile", path_str(&profile), "--q", "0.2"]);
    assert_eq!(out.code, 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!((v["plan"]["s"].as_u64(), v["plan"]["p"].as_u64(), v["plan"]["r"].as_u64()), (Some(10), Some(10), Some(91)));
    assert_eq!(v["leftover_cardinality"].as_u64(), Some(90));
}

#[test]
fn blocking_plan_from_hand_profile() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write(dir.path(), "p.json", &json!({"values": {"4": 0.25}, "dependence_range": null}));
    let out = specfield(&["blocking-plan", "--v1", "100", "--profile", path_str(&profile), "--q", "0.2", "--dims", "100x3"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!((v["plan"]["s"].as_u64(), v["plan"]["p"].as_u64(), v["plan"]["r"].as_u64()), (Some(4), Some(2), Some(47)));
    assert_eq!(v["block_cardinality"].as_u64(), Some(141));
    assert_eq!(v["leftover_cardinality"].as_u64(), Some(18));
    let out = specfield(&["blocking-plan", "--v1", "100", "--profile", path_str(&profile), "--q", "0.3"]);
    assert_eq!(out.code, 1);
}

#[test]
fn miller_and_negligibility_reports_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "spec": ma1_spec(1),
        "dims_sequence": [[16], [64]],
        "scheme": {"base": [FRAC_PI_2], "m": 1, "delta": 0.25, "axis": 0},
        "replications": 200,
        "seed": 9,
        "q": 0.2,
        "weights": [1.0, 1.0]
    });
    let path = write(dir.path(), "cfg.json", &config);
    let out = specfield(&["miller", "--config", path_str(&path)]);
    assert_eq!(out.code, 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: MillerReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert!((report.rows[0].target - 2.0).abs() < 1e-12);

    let out = specfield(&["negligibility", "--config", path_str(&path)]);
    assert_eq!(out.code, 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: NegligibilityReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.rows[1].plan.s, 4);
    assert!(report.rows[1].leftover_exact_independent.is_none());

    let mut shrinking = config.clone();
    shrinking["dims_sequence"] = json!([[64], [16]]);
    let path = write(dir.path(), "bad.json", &shrinking);
    assert_eq!(specfield(&["miller", "--config", path_str(&path)]).code, 1);
}

fn run_args(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("specfield").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn help_and_usage_codes() {
    let (code, out, _) = run_args(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("clt-experiment") && out.contains("mixing-estimate"));
    assert_eq!(run_args(&["--version"]).0, 0);
    assert_eq!(run_args(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(run_args(&[]).0, EXIT_USAGE);
    assert_eq!(run_args(&["kernels", "--alpha", "0.3"]).0, 1);
}

#[test]
fn kernels_subcommand() {
    let (code, out, _) = run_args(&["kernels", "--alpha", "-0.5", "--n", "4"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let k = v["fejer"].as_f64().unwrap();
    assert!((k - v["dirichlet_abs_sq"].as_f64().unwrap()).abs() < 1e-12);
    assert_eq!(run_args(&["kernels", "--alpha", "0.5", "--n", "0"]).0, 1);
}

#[test]
fn box_parsing() {
    assert_eq!(parse_dims("8x4").unwrap().sides(), &[8, 4]);
    assert_eq!(parse_dims("8,4").unwrap().sides(), &[8, 4]);
    assert!(parse_dims("8xq").is_err());
    assert!(parse_dims("0").is_err());
}
