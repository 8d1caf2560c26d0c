use std::path::Path;
use std::process::Command;

use serde_json::{json, Value};

fn steinweiss(args: &[&str], out: &Path) -> (i32, Value) {
    let status = Command::new(env!("CARGO_BIN_EXE_steinweiss"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs");
    let code = status.status.code().expect("exit code");
    let manifest = std::fs::read_to_string(out.join("manifest.json"))
        .map(|t| serde_json::from_str(&t).expect("manifest is json"))
        .unwrap_or(Value::Null);
    (code, manifest)
}

fn write_config(dir: &Path, name: &str, value: &Value) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path.display().to_string()
}

fn line_params(lambda: f64, p: f64) -> Value {
    json!({"spec": {"kind": {"kind": "euclidean", "n": 1}, "weight_kind": "full_norm"},
           "alpha": 0.0, "beta": 0.0, "lambda": lambda, "p": p, "q_prime": p})
}

fn product_params() -> Value {
    json!({"spec": {"kind": {"kind": "product", "m": 1, "n": 1}, "weight_kind": "partial_first_factor"},
           "alpha": 0.1, "beta": 0.1, "lambda": 1.0, "p": 1.0 / 0.7, "q_prime": 1.0 / 0.7})
}

#[test]
fn selftest_without_config_passes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, m) = steinweiss(&["selftest", "--seed", "5"], dir.path());
    assert_eq!(code, 0);
    assert_eq!(m["status"], "ok");
    assert_eq!(m["seed"], 5);
    assert_eq!(m["result"]["report"]["passed"], true);
}

#[test]
fn bundled_sequences_are_classified() {
    let dir = tempfile::tempdir().unwrap();
    let (code, m) = steinweiss(&["classify"], dir.path());
    assert_eq!(code, 0);
    let verdicts: Vec<&str> = m["result"]["sequences"].as_array().unwrap().iter().map(|s| s["verdict"].as_str().unwrap()).collect();
    assert_eq!(verdicts, ["Compactness", "Vanishing", "Dichotomy"]);
    assert!(dir.path().join("sequence_dichotomy.sgf").exists());
}

#[test]
fn classify_reads_a_stored_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = steinweiss(&["classify"], dir.path());
    assert_eq!(code, 0);
    let cfg = write_config(
        dir.path(),
        "c.json",
        &json!({"schema_version": 1, "input": "sequence_vanishing.sgf", "expected": "Vanishing"}),
    );
    let out = dir.path().join("again");
    let (code, m) = steinweiss(&["classify", "--config", &cfg], &out);
    assert_eq!(code, 0, "{m}");
    // a wrong expectation is a tolerance breach
    let bad = write_config(dir.path(), "d.json", &json!({"schema_version": 1, "input": "sequence_vanishing.sgf", "expected": "Compactness"}));
    let (code, _) = steinweiss(&["classify", "--config", &bad], &dir.path().join("bad"));
    assert_eq!(code, 3);
}

#[test]
fn sw_rejects_large_t_as_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sw.json",
        &json!({"schema_version": 1, "params": product_params(), "sw": {"t": 3.0, "epsilon": 0.1, "samples": 10, "seed": 0}}),
    );
    let (code, m) = steinweiss(&["check-sw", "--config", &cfg], dir.path());
    assert_eq!(code, 2);
    assert_eq!(m["error"]["kind"], "invalid_argument");
    assert!(m["error"]["message"].as_str().unwrap().contains(">= m"));
}

#[test]
fn sw_reference_parameters_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sw.json",
        &json!({"schema_version": 1, "params": product_params(), "sw": {"t": 1.5, "epsilon": 0.1, "samples": 500, "seed": 1}}),
    );
    let (code, m) = steinweiss(&["check-sw", "--config", &cfg], dir.path());
    assert_eq!(code, 0, "{m}");
    assert_eq!(m["result"]["report"]["condition2_pass"], true);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let grid = json!({"radial_levels": 8, "angular_resolution": 4});
    let cases = [
        json!({"schema_version": 1, "params": line_params(1.0, 2.0), "grid": grid}),
        json!({"schema_version": 7, "params": line_params(0.5, 4.0 / 3.0), "grid": grid}),
        json!({"schema_version": 1, "params": line_params(0.5, 4.0 / 3.0), "grid": grid, "extra": 1}),
    ];
    for (i, c) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("{i}.json"), c);
        let (code, m) = steinweiss(&["maximize", "--config", &cfg], &dir.path().join(i.to_string()));
        assert_eq!(code, 2, "case {i}: {m}");
        assert!(m["error"].is_object());
    }
    let (code, _) = steinweiss(&["maximize"], &dir.path().join("none"));
    assert_eq!(code, 2);
    let diag = write_config(
        dir.path(),
        "diag.json",
        &json!({"schema_version": 1, "space": {"kind": "euclidean", "n": 1}, "lambda": 1.0, "grid": grid}),
    );
    let (code, m) = steinweiss(&["verify-diagonal", "--config", &diag], &dir.path().join("diag"));
    assert_eq!(code, 2);
    assert_eq!(m["error"]["kind"], "inadmissible");
}

#[test]
fn maximize_is_reproducible_and_logs_iterates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "m.json",
        &json!({"schema_version": 1, "params": line_params(0.5, 4.0 / 3.0),
                "grid": {"radial_levels": 24, "angular_resolution": 4}, "init": {"kind": "random"},
                "maximize": {"max_iter": 3000}}),
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let (code, ma) = steinweiss(&["maximize", "--config", &cfg, "--seed", "11", "--workers", "1"], &a);
    assert_eq!(code, 0, "{ma}");
    let (_, mb) = steinweiss(&["maximize", "--config", &cfg, "--seed", "11", "--workers", "1"], &b);
    assert_eq!(ma["constant_estimate"], mb["constant_estimate"]);
    assert_eq!(ma["config"], mb["config"]);
    assert_eq!(ma["workers"], 1);
    assert_eq!(std::fs::read(a.join("iterates.csv")).unwrap(), std::fs::read(b.join("iterates.csv")).unwrap());
    let log = std::fs::read_to_string(a.join("iterates.csv")).unwrap();
    assert!(log.starts_with("iteration,functional,residual,half_mass_radius,tail_mass"));
    assert_eq!(ma["result"]["symmetry"]["x_prime_asymmetry"].as_f64().map(|x| x < 1e-6), Some(true));
}

#[test]
fn equal_exponents_carry_the_non_existence_flag() {
    let dir = tempfile::tempdir().unwrap();
    let params = json!({"spec": {"kind": {"kind": "euclidean", "n": 2}, "weight_kind": "full_norm"},
                        "alpha": 0.25, "beta": 0.25, "lambda": 1.5, "p": 2.0, "q_prime": 2.0});
    let cfg = write_config(
        dir.path(),
        "m.json",
        &json!({"schema_version": 1, "params": params, "grid": {"radial_levels": 12, "angular_resolution": 8, "r_min": 0.01, "r_max": 100.0},
                "maximize": {"max_iter": 20}}),
    );
    let (_, m) = steinweiss(&["maximize", "--config", &cfg], dir.path());
    let flags: Vec<&str> = m["flags"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    assert!(flags.contains(&"NON-EXISTENCE-REGIME"), "{m}");
}

#[test]
fn solve_system_seeds_from_a_maximize_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let grid = json!({"radial_levels": 24, "angular_resolution": 8, "r_min": 1e-4, "r_max": 1e4});
    let max_cfg = write_config(
        dir.path(),
        "m.json",
        &json!({"schema_version": 1, "params": product_params(), "grid": grid, "maximize": {"tol": 1e-7, "max_iter": 3000}}),
    );
    let (code, _) = steinweiss(&["maximize", "--config", &max_cfg], &dir.path().join("max"));
    assert!(code == 0 || code == 4);
    let sys_cfg = write_config(
        dir.path(),
        "s.json",
        &json!({"schema_version": 1, "params": product_params(), "grid": grid,
                "seed_from_manifest": "max/manifest.json", "tol": 1e-5}),
    );
    let (code, m) = steinweiss(&["solve-system", "--config", &sys_cfg], &dir.path().join("sys"));
    assert_eq!(code, 0, "{m}");
    assert_eq!(m["result"]["seeded_from"].as_str().map(|s| s.ends_with("manifest.json")), Some(true));
    assert!(dir.path().join("sys/system.sgf").exists());
    // a grid mismatch is refused
    let other = write_config(
        dir.path(),
        "t.json",
        &json!({"schema_version": 1, "params": product_params(), "grid": {"radial_levels": 16, "angular_resolution": 8},
                "seed_from_manifest": "max/manifest.json"}),
    );
    let (code, _) = steinweiss(&["solve-system", "--config", &other], &dir.path().join("sys2"));
    assert_eq!(code, 2);
}
