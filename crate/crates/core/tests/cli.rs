use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn rpp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rpp")).args(args).output().expect("rpp runs")
}

fn run_with(dir: &Path, cmd: &str, toml: &str, out: &str) -> Output {
    let cfg = dir.join(format!("{cmd}-{out}.toml"));
    fs::write(&cfg, toml).unwrap();
    let out = dir.join(out);
    rpp(&[cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn stderr_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

const SIMULATE_HPP: &str = r#"
seed = 11
[model]
kind = "hpp"
lambda = 100
[simulate]
count = 2
l_curve = true
"#;

fn simulated_pattern(dir: &Path) -> PathBuf {
    let o = run_with(dir, "simulate", SIMULATE_HPP, "sim");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    dir.join("sim").join("pattern_000.csv")
}

#[test]
fn simulate_is_byte_identical_under_one_seed() {
    let dir = TempDir::new().unwrap();
    for out in ["a", "b"] {
        assert!(run_with(dir.path(), "simulate", SIMULATE_HPP, out).status.success());
    }
    let (a, b) = (files(&dir.path().join("a")), files(&dir.path().join("b")));
    let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        ["config.toml", "lcurve_000.csv", "lcurve_001.csv", "manifest.json", "pattern_000.csv", "pattern_001.csv"]
    );
    assert_eq!(a, b);

    let o = rpp(&[
        "simulate",
        "--config",
        dir.path().join("simulate-a.toml").to_str().unwrap(),
        "--seed",
        "12",
        "--out",
        dir.path().join("c").to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let c = files(&dir.path().join("c"));
    assert_ne!(a[4].1, c[4].1, "another seed gives another pattern");
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let o = run_with(dir.path(), "simulate", "seed = 1\nsede = 2\n[model]\nkind = \"hpp\"\nlambda = 10\n", "out");
    assert_eq!(o.status.code(), Some(2));
    let err = stderr_json(&o);
    assert_eq!(err["error"], "config");
    assert_eq!(err["command"], "simulate");
    assert!(err["message"].as_str().unwrap().contains("sede"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_config_and_seed_are_config_errors() {
    let dir = TempDir::new().unwrap();
    assert_eq!(rpp(&["simulate"]).status.code(), Some(2));
    let o = run_with(dir.path(), "simulate", "[model]\nkind = \"hpp\"\nlambda = 10\n", "out");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_json(&o)["message"].as_str().unwrap().contains("seed"));
}

#[test]
fn points_outside_the_window_are_reported_by_line() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("bad.csv");
    fs::write(&data, "# window 0 1 0 1\nx,y\n0.5,0.5\n1.25,0.5\n0.1,0.1\n").unwrap();
    let toml = format!(
        "seed = 3\n[data]\npath = {:?}\n[prior]\nkind = \"hpp\"\nparams = [\"gamma(100, 1)\"]\n[check]\nsimulations = 19\n",
        data.to_str().unwrap()
    );
    let o = run_with(dir.path(), "check", &toml, "out");
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr_json(&o)["message"].as_str().unwrap().to_string();
    assert!(msg.contains('4'), "{msg}");
}

#[test]
fn empty_and_large_patterns_are_read() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "# window 0 1 0 1\nx,y\n").unwrap();
    assert!(repulsive::io::read_pattern(&empty).unwrap().is_empty());

    let mut text = String::from("# window 0 2 0 1\nx,y\n");
    for i in 0..89 {
        text.push_str(&format!("{},{}\n", i as f64 / 50.0, (i % 7) as f64 / 7.0));
    }
    let big = dir.path().join("big.csv");
    fs::write(&big, text).unwrap();
    assert_eq!(repulsive::io::read_pattern(&big).unwrap().n(), 89);
}

#[test]
fn numerical_failure_exits_3_and_leaves_no_partial_output() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join("keep.txt"), "unrelated").unwrap();
    let toml = r#"
seed = 5
[model]
kind = "strauss"
beta = 1000
gamma = 1
r = 0.05
[simulate]
count = 3
[sampler.strauss]
max_points = 5
"#;
    let o = run_with(dir.path(), "simulate", toml, "out");
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"], "numerical");
    let left: Vec<String> = files(&out).into_iter().map(|(n, _)| n).collect();
    assert_eq!(left, ["keep.txt"]);
}

#[test]
fn check_writes_one_row_per_radius() {
    let dir = TempDir::new().unwrap();
    let data = simulated_pattern(dir.path());
    let toml = format!(
        "seed = 4\n[data]\npath = {:?}\n[prior]\nkind = \"hpp\"\nparams = [\"gamma(100, 1)\"]\n[check]\nsimulations = 19\nradii = [0.02, 0.05]\n",
        data.to_str().unwrap()
    );
    let o = run_with(dir.path(), "check", &toml, "chk");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(dir.path().join("chk/mc_test.csv")).unwrap();
    let rows: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "r,observed,sim_q025,sim_median,sim_q975,p_value");
    assert_eq!(rows.len(), 3);
    for row in &rows[1..] {
        let p: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!((0.1..=1.0).contains(&p), "p = {p} with 19 simulations");
    }
}

/// Minimal JSON Schema subset: type, enum, required, properties,
/// additionalProperties = false, items, minItems, maxItems, minimum, maximum.
fn validate(schema: &Value, v: &Value, path: &str, errors: &mut Vec<String>) {
    if let Some(t) = schema.get("type") {
        let types: Vec<&str> = match t {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(Value::as_str).collect(),
            _ => vec![],
        };
        let ok = types.iter().any(|t| match *t {
            "object" => v.is_object(),
            "array" => v.is_array(),
            "string" => v.is_string(),
            "number" => v.is_number(),
            "integer" => v.is_u64() || v.is_i64(),
            "boolean" => v.is_boolean(),
            "null" => v.is_null(),
            _ => false,
        });
        if !ok {
            errors.push(format!("{path}: expected {types:?}, got {v}"));
            return;
        }
    }
    if let Some(Value::Array(options)) = schema.get("enum") {
        if !options.contains(v) {
            errors.push(format!("{path}: {v} not in {options:?}"));
        }
    }
    if let Some(x) = v.as_f64() {
        if schema.get("minimum").and_then(Value::as_f64).is_some_and(|m| x < m) {
            errors.push(format!("{path}: {x} below minimum"));
        }
        if schema.get("maximum").and_then(Value::as_f64).is_some_and(|m| x > m) {
            errors.push(format!("{path}: {x} above maximum"));
        }
    }
    if let Value::Object(map) = v {
        for key in schema.get("required").and_then(Value::as_array).into_iter().flatten() {
            if !map.contains_key(key.as_str().unwrap()) {
                errors.push(format!("{path}: missing {key}"));
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        for (k, child) in map {
            match props.and_then(|p| p.get(k)) {
                Some(s) => validate(s, child, &format!("{path}.{k}"), errors),
                None if schema.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    errors.push(format!("{path}: unexpected {k}"))
                }
                None => {}
            }
        }
    }
    if let Value::Array(items) = v {
        let len = items.len() as u64;
        if schema.get("minItems").and_then(Value::as_u64).is_some_and(|m| len < m) {
            errors.push(format!("{path}: fewer than minItems"));
        }
        if schema.get("maxItems").and_then(Value::as_u64).is_some_and(|m| len > m) {
            errors.push(format!("{path}: more than maxItems"));
        }
        if let Some(s) = schema.get("items") {
            for (i, item) in items.iter().enumerate() {
                validate(s, item, &format!("{path}[{i}]"), errors);
            }
        }
    }
}

fn schema() -> Value {
    let text = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas/fit_summary.schema.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn validator_rejects_malformed_summaries() {
    let s = schema();
    let mut errors = Vec::new();
    validate(&s, &serde_json::json!({ "model": "poisson", "draws": -1 }), "$", &mut errors);
    assert!(errors.iter().any(|e| e.contains("missing")));
    assert!(errors.iter().any(|e| e.contains("poisson")));
    assert!(errors.iter().any(|e| e.contains("draws")));
}

#[test]
fn fit_summary_matches_schema() {
    let dir = TempDir::new().unwrap();
    let data = simulated_pattern(dir.path());
    let toml = format!(
        r#"
seed = 9
[data]
path = {:?}
[prior]
kind = "hpp"
params = ["gamma(100, 1)"]
[summary]
m = 4
r_max = 0.1
[pilot]
draws = 1000
p_star = 0.05
[fit]
n_keep = 200
l_curve = true
l_curve_patterns = 5
"#,
        data.to_str().unwrap()
    );
    let o = run_with(dir.path(), "fit", &toml, "fit");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("fit");
    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let mut errors = Vec::new();
    validate(&schema(), &summary, "$", &mut errors);
    assert!(errors.is_empty(), "{errors:#?}");
    assert_eq!(summary["draws"], 200);
    let lambda = &summary["parameters"][0];
    assert_eq!(lambda["name"], "lambda");
    let ci = lambda["interval_95"].as_array().unwrap();
    assert!(ci[0].as_f64().unwrap() <= lambda["mean"].as_f64().unwrap());

    let table = repulsive::io::read_posterior(out.join("posterior.csv")).unwrap();
    assert_eq!(table.draws.len(), 200);
    for name in ["pilot.json", "lcurve_observed.csv", "lcurve_predictive.csv", "manifest.json", "config.toml"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "fit");
    assert_eq!(manifest["seed"], 9);
}
