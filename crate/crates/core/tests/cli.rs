mod common;

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use common::{assert_valid, validate};

fn kwm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kwm"))
        .args(args)
        .env_remove("KWM_CALIBRATION")
        .output()
        .expect("kwm runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn ok_json(args: &[&str], schema: &str) -> Value {
    let out = kwm(args);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_valid(schema, &v);
    v
}

fn usage_error(args: &[&str]) -> String {
    let out = kwm(args);
    assert_eq!(out.status.code(), Some(2), "args {args:?}");
    assert!(out.stdout.is_empty(), "stdout must stay clean on errors");
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert_eq!(err.trim_end().lines().count(), 1, "one-line diagnostic, got {err:?}");
    err
}

#[test]
fn schema_checker_catches_violations() {
    let schema = serde_json::json!({
        "type": "object",
        "required": ["a"],
        "additionalProperties": false,
        "properties": {"a": {"type": "integer", "minimum": 1}, "b": {"enum": ["x"]}}
    });
    assert!(validate(&schema, &serde_json::json!({"a": 2})).is_empty());
    assert_eq!(validate(&schema, &serde_json::json!({"a": 0})).len(), 1);
    assert_eq!(validate(&schema, &serde_json::json!({"b": "y", "c": 1})).len(), 3);
    assert_eq!(validate(&schema, &serde_json::json!({"a": 1.5})).len(), 1);
}

#[test]
fn bound_sub_gaussian_example() {
    let v = ok_json(&["bound", "--n", "100", "--sigma2", "0.25", "--d", "4"], "bound");
    assert_eq!(v["M"], 10.0);
    assert_eq!(v["regime"], "SubGaussian");
    assert_eq!(v["mode"], "unit");
    assert!(v.get("tail_at_t").is_none());
}

#[test]
fn bound_accepts_fractions_and_tail() {
    let v = ok_json(&["bound", "--n", "100", "--sigma2", "1/4", "--d", "4", "--k", "6", "--t", "20"], "bound");
    assert_eq!(v["M"], 10.0);
    assert_eq!(v["tail_at_t"], 1.0 / 16.0);
    assert_eq!(v["c"], 1.0);
}

#[test]
fn bound_calibrated_mode_scales_by_regime_constant() {
    let unit = ok_json(&["bound", "--n", "100", "--sigma2", "0.25", "--d", "4"], "bound");
    let cal = ok_json(&["bound", "--n", "100", "--sigma2", "0.25", "--d", "4", "--mode", "calibrated"], "bound");
    assert_eq!(cal["mode"], "calibrated");
    let ratio = cal["M"].as_f64().unwrap() / unit["M"].as_f64().unwrap();
    assert!(ratio > 0.5 && ratio < 1.0, "{ratio}");
}

#[test]
fn missing_calibration_falls_back_to_unit_with_warning() {
    let out = Command::new(env!("CARGO_BIN_EXE_kwm"))
        .args(["bound", "--n", "100", "--sigma2", "0.25", "--d", "4", "--mode", "calibrated"])
        .env("KWM_CALIBRATION", "/nonexistent/calibration.json")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["mode"], "unit");
    assert_eq!(v["M"], 10.0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn bound_domain_errors() {
    let err = usage_error(&["bound", "--n", "100", "--sigma2", "0.25", "--d", "3"]);
    assert!(err.contains("d must be even"), "{err}");
    let err = usage_error(&["bound", "--n", "100", "--sigma2", "0.25", "--d", "6", "--k", "4"]);
    assert!(err.contains("d <= k required"), "{err}");
    usage_error(&["bound", "--n", "100", "--sigma2", "0", "--d", "4"]);
    usage_error(&["bound", "--n", "100", "--sigma2", "abc", "--d", "4"]);
    usage_error(&["bound", "--n", "100", "--sigma2", "0.25", "--d", "4", "--bogus"]);
    usage_error(&["frobnicate"]);
}

#[test]
fn exact_examples() {
    let v = ok_json(&["exact", "--dist", "threepoint", "--n", "3", "--d", "4", "--sigma2", "1/2"], "exact");
    assert_eq!(v["exact"], "6/1");
    let v = ok_json(&["exact", "--dist", "symbinom", "--n", "2", "--p", "1/2", "--d", "4"], "exact");
    assert_eq!(v["exact"], "5/2");
    let v = ok_json(&["exact", "--dist", "het", "--sigma2-list", "1/2,1/3", "--d", "4"], "exact");
    assert_eq!(v["exact"], "11/6");
    let v = ok_json(&["exact", "--dist", "threepoint", "--n", "3", "--d", "4", "--sigma2", "0.5"], "exact");
    assert_eq!(v["exact"], "6/1");
    assert!(v["decimal"].as_str().unwrap().starts_with('6'));
}

#[test]
fn exact_family_mismatch_is_usage_error() {
    usage_error(&["exact", "--dist", "threepoint", "--n", "3", "--d", "4", "--p", "1/2"]);
    usage_error(&["exact", "--dist", "threepoint", "--n", "3", "--d", "4"]);
    usage_error(&["exact", "--dist", "symbinom", "--n", "2", "--sigma2", "1/2", "--d", "4"]);
    usage_error(&["exact", "--dist", "het", "--n", "3", "--sigma2-list", "1/2,1/3", "--d", "4"]);
    usage_error(&["exact", "--dist", "symbinom", "--n", "2", "--p", "3/4", "--d", "4"]);
    usage_error(&["exact", "--dist", "gauss", "--n", "2", "--d", "4"]);
}

#[test]
fn compare_rows() {
    let v = ok_json(&["compare", "--n", "100", "--d", "4", "--sigma2", "0.25"], "compare");
    assert!(v["best"] == "ours" || v["best"] == "bernstein");
    assert!(v.get("bellare").is_none());

    let small = format!("{}", (-16.0f64).exp());
    let v = ok_json(&["compare", "--n", "1", "--d", "8", "--sigma2", &small, "--mu", "0.5"], "compare");
    assert_eq!(v["best"], "ours");
    let ours = v["ours"].as_f64().unwrap();
    for other in ["schmidt_opt", "bellare", "bernstein", "rosenthal"] {
        assert!(ours < v[other].as_f64().unwrap(), "{other}");
    }
    usage_error(&["compare", "--n", "10", "--d", "4", "--sigma2", "0.5", "--mu", "0.25"]);
}

#[test]
fn compare_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("row.csv");
    ok_json(
        &["compare", "--n", "16", "--d", "4", "--sigma2", "1/4", "--csv", path.to_str().unwrap()],
        "compare",
    );
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,d,sigma2,mu,ours,schmidt_raw,schmidt_opt,bellare,bernstein,rosenthal,best"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 11);
    assert_eq!(row[3], "");
}

#[test]
fn verify_suites() {
    let v = ok_json(&["verify", "--suite", "majorization", "--seed", "42", "--cases", "500"], "verify");
    assert_eq!(v["failures"].as_array().unwrap().len(), 0);
    assert!(v["cases"].as_u64().unwrap() >= 500);
    let v = ok_json(&["verify", "--suite", "formula"], "verify");
    assert_eq!(v["failures"].as_array().unwrap().len(), 0);
    let v = ok_json(&["verify", "--suite", "regimes"], "verify");
    assert!(v["extremal_ratios"]["exact_over_m"]["max"].as_f64().unwrap() <= 16.0);
    usage_error(&["verify", "--suite", "nonsense"]);
}

#[test]
fn verify_failure_exit_code() {
    // A corrupt calibration makes the calibrated-reproduction checks fail.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cal.json");
    let mut cal: Value = serde_json::from_str(
        &std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/calibration.json")).unwrap(),
    )
    .unwrap();
    cal["SubGaussian"] = serde_json::json!(100.0);
    std::fs::write(&path, cal.to_string()).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_kwm"))
        .args(["verify", "--suite", "regimes"])
        .env("KWM_CALIBRATION", &path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v = json_of(&out);
    assert_valid("verify", &v);
    assert!(!v["failures"].as_array().unwrap().is_empty());
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn simulate_small_and_exhaustive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"n": 1, "k": 2, "sigma2": 0.5, "p": 3, "trials": 10000, "t_list": [0.5], "seed": 1}"#,
    );
    assert_valid("simulate-config", &serde_json::from_str(&std::fs::read_to_string(&cfg).unwrap()).unwrap());
    let v = ok_json(&["simulate", "--config", &cfg], "simulate");
    assert_eq!(v["rows"].as_array().unwrap().len(), 1);
    assert_eq!(v["rows"][0]["exact"], false);

    let cfg = write_config(
        dir.path(),
        r#"{"n": 5, "k": 3, "sigma2": 0.4, "p": 5, "trials": 1, "t_list": [0, 1, 2], "seed": 0, "exhaustive": true}"#,
    );
    let v = ok_json(&["simulate", "--config", &cfg], "simulate");
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r["exact"] == true && r["trials"] == 125));
}

#[test]
fn simulate_is_deterministic_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"n": 20, "k": 4, "sigma2": 0.3, "p": 23, "trials": 20000, "t_list": [1, 4, 8], "seed": 9}"#,
    );
    let csv = dir.path().join("rows.csv");
    let a = kwm(&["simulate", "--config", &cfg, "--csv", csv.to_str().unwrap()]);
    let b = kwm(&["simulate", "--config", &cfg]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,empirical,trials,wilson_halfwidth"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn simulate_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"n": 20, "k": 4, "sigma2": 0.3, "p": 13, "trials": 20000, "t_list": [1], "seed": 9}"#,
    );
    usage_error(&["simulate", "--config", &cfg]);
    let cfg = write_config(
        dir.path(),
        r#"{"n": 20, "k": 4, "sigma2": 0.3, "trials": 20000, "t_list": [1], "seed": 9}"#,
    );
    usage_error(&["simulate", "--config", &cfg]);
    let cfg = write_config(
        dir.path(),
        r#"{"n": 20, "k": 4, "sigma2": 0.3, "p": 23, "trials": 20000, "t_list": [1], "seed": 9, "extra": 1}"#,
    );
    usage_error(&["simulate", "--config", &cfg]);
    let cfg = write_config(
        dir.path(),
        r#"{"n": 20, "k": 4, "sigma2": 0.3, "p": 21, "trials": 20000, "t_list": [1], "seed": 9}"#,
    );
    usage_error(&["simulate", "--config", &cfg]);
    usage_error(&["simulate", "--config", "/nonexistent/config.json"]);
}

fn read_csv(path: &Path) -> Vec<csv::StringRecord> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .unwrap()
        .records()
        .map(Result::unwrap)
        .collect()
}

#[test]
fn sweep_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let v = ok_json(
        &["sweep", "--grid", "n=pow2:0:3;d=2:8:2;sigma2=log2:-6:0:1", "--out", out.to_str().unwrap()],
        "sweep",
    );
    assert_eq!(v["files"].as_array().unwrap().len(), 4);

    for name in ["bound_surface", "regime_boundaries", "g_curve", "schmidt_curve"] {
        let text = std::fs::read_to_string(out.join(format!("{name}.csv"))).unwrap();
        assert!(text.starts_with("# columns: "), "{name}");
    }
    assert_eq!(read_csv(&out.join("bound_surface.csv")).len(), 4 * 4 * 7);

    // g(q) peaks within one grid step of log(1/a) for every a < 1.
    let g = read_csv(&out.join("g_curve.csv"));
    let mut best: std::collections::BTreeMap<String, (f64, f64, f64)> = Default::default();
    for r in &g {
        let (q, gv, target): (f64, f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap(), r[3].parse().unwrap());
        let e = best.entry(r[0].to_string()).or_insert((q, gv, target));
        if gv > e.1 {
            *e = (q, gv, target);
        }
    }
    assert!(best.contains_key("0.5"));
    for (a, (q, _, target)) in best {
        if a.parse::<f64>().unwrap() < 1.0 {
            assert!((q - target).abs() <= 0.05 + 1e-12, "a = {a}: q = {q}, log(1/a) = {target}");
        }
    }

    // The C-curve is minimized within one grid step of C*.
    let s = read_csv(&out.join("schmidt_curve.csv"));
    for d in ["2", "4", "6", "8"] {
        let rows: Vec<_> = s.iter().filter(|r| &r[0] == d).collect();
        let min = rows
            .iter()
            .min_by(|a, b| a[3].parse::<f64>().unwrap().total_cmp(&b[3].parse::<f64>().unwrap()))
            .unwrap();
        let c: f64 = min[1].parse().unwrap();
        let cstar: f64 = min[4].parse().unwrap();
        let step = 0.005 * d.parse::<f64>().unwrap() / 36.0;
        assert!((c - cstar).abs() <= step + 1e-15, "d = {d}");
    }
}

#[test]
fn sweep_rejects_empty_grid() {
    let dir = tempfile::tempdir().unwrap();
    usage_error(&["sweep", "--grid", "", "--out", dir.path().to_str().unwrap()]);
    usage_error(&["sweep", "--grid", "n=1;d=4:2:2;sigma2=1", "--out", dir.path().to_str().unwrap()]);
}

#[test]
fn calibrate_reproduces_shipped_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cal.json");
    let out = kwm(&["calibrate", "--out", path.to_str().unwrap(), "--date", "2026-10-16"]);
    assert_eq!(out.status.code(), Some(0));
    let printed = json_of(&out);
    assert_valid("calibration", &printed);
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let shipped: Value = serde_json::from_str(
        &std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/calibration.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(printed, written);
    assert_eq!(written, shipped);
}

#[test]
fn repeated_runs_are_byte_identical() {
    for args in [
        vec!["bound", "--n", "7", "--sigma2", "0.01", "--d", "10", "--t", "3"],
        vec!["exact", "--dist", "het", "--sigma2-list", "1/5,2/7,1", "--d", "8"],
        vec!["compare", "--n", "50", "--d", "6", "--sigma2", "1/100", "--mu", "1/10"],
        vec!["verify", "--suite", "majorization", "--seed", "3", "--cases", "40"],
    ] {
        assert_eq!(kwm(&args).stdout, kwm(&args).stdout, "{args:?}");
    }
}

#[test]
fn help_and_version_exit_zero() {
    for flag in ["--help", "--version"] {
        let out = kwm(&[flag]);
        assert_eq!(out.status.code(), Some(0));
        assert!(!out.stdout.is_empty());
    }
}
