use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_entire-ma");

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL: &str = r#"{
  "dimension": 2,
  "group": "cyclic:8",
  "f": {"form": "constant", "value": 1.0},
  "g": {"form": "constant", "value": 1.0},
  "schedule": {"k_values": [2, 4], "targets_per_k": 24, "grid_per_k": 12},
  "tolerances": {"cauchy": 0.1}
}"#;

#[test]
fn identical_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "small.json", SMALL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let (ca, _, _) = run(&["solve", "--config", &cfg, "--out", a.to_str().unwrap(), "--seed", "3"]);
    let (cb, _, _) = run(&["solve", "--config", &cfg, "--out", b.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(ca, cb);
    for f in ["FORMAT", "solution.json", "records.csv", "report.json", "iterates/k004.json", "iterates/k004_trace.csv"] {
        let (x, y) = (std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
        assert!(x == y, "{f} differs");
    }
    assert_eq!(std::fs::read_to_string(a.join("FORMAT")).unwrap().trim(), "entire-ma-run/1");
}

#[test]
fn malformed_config_reports_line_and_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.json", "{\n  \"dimension\": 2,\n  \"group\": \"cyclic:8\",\n  \"flux\": 3\n}");
    let (code, _, err) = run(&["solve", "--config", &cfg]);
    assert_eq!(code, 1);
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn reducible_group_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "neg.json", &SMALL.replace("cyclic:8", "neg-identity:2"));
    let (code, _, err) = run(&["solve", "--config", &cfg, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("irreducibility"), "{err}");
}

#[test]
fn verify_rejects_empty_and_corrupted_solutions() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "small.json", SMALL);
    let empty = write(tmp.path(), "empty.json", r#"{"n": 2, "pieces": []}"#);
    assert_eq!(run(&["verify", &empty, "--config", &cfg]).0, 1);

    let oracle_dir = tmp.path().join("oracle");
    assert_eq!(run(&["oracle", "--config", &cfg, "--out", oracle_dir.to_str().unwrap()]).0, 0);
    let good = oracle_dir.join("oracle_solution.json");
    let (code, out, _) = run(&["verify", good.to_str().unwrap(), "--config", &cfg]);
    assert_eq!(code, 0, "{out}");

    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&good).unwrap()).unwrap();
    let pieces = v["pieces"].as_array_mut().unwrap();
    let mid = pieces
        .iter()
        .position(|p| {
            let s = p["slope"].as_array().unwrap();
            s[0].as_f64().unwrap().abs() < 0.1 && s[1].as_f64().unwrap().abs() < 0.1
        })
        .unwrap();
    let c = pieces[mid]["intercept"].as_f64().unwrap();
    pieces[mid]["intercept"] = serde_json::json!(c - 0.5);
    let bad = write(tmp.path(), "bad.json", &v.to_string());
    assert_ne!(run(&["verify", &bad, "--config", &cfg]).0, 0);
}

#[test]
fn oracle_writes_closed_forms_and_rejects_degenerate_f() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "r3.json",
        &SMALL.replace(r#""g": {"form": "constant", "value": 1.0}"#, r#""g": {"form": "radial-poly", "terms": [[4.0, 2.0]]}"#),
    );
    let dir = tmp.path().join("o");
    assert_eq!(run(&["oracle", "--config", &cfg, "--out", dir.to_str().unwrap()]).0, 0);
    let table = std::fs::read_to_string(dir.join("oracle.csv")).unwrap();
    let mut worst: f64 = 0.0;
    for line in table.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        worst = worst.max((cols[1] - std::f64::consts::SQRT_2 / 3.0 * cols[0].powi(3)).abs());
    }
    assert!(worst < 1e-6, "{worst}");

    let cfg = write(
        tmp.path(),
        "gap.json",
        &SMALL.replace(
            r#""f": {"form": "constant", "value": 1.0}"#,
            r#""f": {"form": "table", "r": [0.0, 0.5, 0.5000001, 10.0], "v": [0.0, 0.0, 1.0, 1.0]}"#,
        ),
    );
    let (code, _, err) = run(&["oracle", "--config", &cfg, "--out", dir.to_str().unwrap()]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn epsilon_handles_presets_and_bad_descriptors() {
    let (code, out, _) = run(&["epsilon", "cyclic:4"]);
    assert_eq!(code, 0);
    assert!(out.contains("epsilon: 0.707106781187"), "{out}");
    assert_eq!(run(&["epsilon", "tetrahedral:3"]).0, 1);
    assert_eq!(run(&["epsilon", r#"{"matrices": [[1, 0, 0, 2]]}"#]).0, 1);
    assert_eq!(run(&["solve"]).0, 1);
}

#[test]
fn vanishing_target_density_gives_a_constant() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "flat.json", &SMALL.replace(r#""g": {"form": "constant", "value": 1.0}"#, r#""g": {"form": "constant", "value": 0.0}"#));
    let dir = tmp.path().join("flat");
    let (code, out, err) = run(&["solve", "--config", &cfg, "--out", dir.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("FLAT"), "{out}");
}
