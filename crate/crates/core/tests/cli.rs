//! End-to-end runs of the command-line binary.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_scrambling"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

fn sidecar(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const FREE_DRIVE: &str = r#"{
    "experiment": "qfi-sweep",
    "output_path": "free",
    "parameters": { "g": 0.0, "order": 3, "times": [1, 2, 3] }
}"#;

const FRICTION: &str = r#"{
    "experiment": "friction",
    "output_path": "fr",
    "seed": 17,
    "parameters": { "g": 0.1, "order": 2, "n_traj": 3000, "times": [5, 10, 12] }
}"#;

#[test]
fn free_drive_sweep_writes_header_and_values() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", FREE_DRIVE);
    let out = run(&cfg, dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("free.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "lambda,G,M,T,qfi,qfi_leading,warning");
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        let t: f64 = cols[3].parse().unwrap();
        let f: f64 = cols[4].parse().unwrap();
        assert!((f / (2.0 * t * t) - 1.0).abs() < 0.005, "{line}");
        // 17 significant digits in exponent notation
        assert_eq!(cols[4].split('e').next().unwrap().len(), 18, "{line}");
    }
    let meta = sidecar(&dir.path().join("free.json"));
    assert_eq!(meta["experiment"], "qfi-sweep");
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(meta["parameters"]["lambda"], 1.0);
    assert!(meta["timestamp_unix"].as_u64().unwrap() > 0);
}

#[test]
fn stochastic_rerun_is_bit_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "f.json", FRICTION);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&cfg, &a, &["--threads", "1"]).status.success());
    assert!(run(&cfg, &b, &["--threads", "3"]).status.success());
    let csv_a = std::fs::read(a.join("fr.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read(b.join("fr.csv")).unwrap());

    let text = String::from_utf8(csv_a).unwrap();
    assert!(text.starts_with("T,mean_P,var_P,delta_lambda,delta_lambda_analytic,stderr,warning\n"));
    // γT = 5 violates the asymptotic precondition, γT ≥ 10 does not
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(!rows[0].rsplit(',').next().unwrap().is_empty());
    assert!(rows[1].ends_with(','));
    assert_eq!(sidecar(&a.join("fr.json"))["seed"], 17);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "f.json", FRICTION);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&cfg, &a, &[]).status.success());
    assert!(run(&cfg, &b, &["--seed", "18"]).status.success());
    assert_eq!(sidecar(&b.join("fr.json"))["seed"], 18);
    assert_ne!(std::fs::read(a.join("fr.csv")).unwrap(), std::fs::read(b.join("fr.csv")).unwrap());
}

#[test]
fn validation_failures_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let cases = [
        (r#"{"experiment": "qfi-sweep", "parameters": {"g": 0.1, "order": 3, "times": [1], "tims": [2]}}"#, "tims"),
        (r#"{"experiment": "qfi-sweep", "seeed": 1}"#, "seeed"),
        (r#"{"experiment": "qfi-sweep", "parameters": {"g": 0.1, "order": 1, "times": [1]}}"#, "order"),
        (r#"{"experiment": "friction", "parameters": {"g": 0.1, "order": 2, "gamma": 0, "times": [1]}}"#, "gamma"),
        (r#"{"experiment": "scramble"}"#, "scramble"),
    ];
    for (i, (body, key)) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("bad{i}.json"), body);
        let out = run(&cfg, dir.path(), &[]);
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert_eq!(out.status.code(), Some(2), "{body}: {stderr}");
        assert!(stderr.contains(key), "{body}: {stderr}");
    }
    let out = run(&dir.path().join("missing.json"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_three() {
    let dir = TempDir::new().unwrap();
    // a capped Fock space cannot hold the spread of the cubic at long times
    let trunc = r#"{"experiment": "detuning-scan",
        "parameters": {"g": 0.1, "order": 3, "omegas": [0.3], "times": [40], "dim": 8, "max_dim": 16}}"#;
    // no nonlinearity, no λ-dependence of ⟨P⟩
    let flat = r#"{"experiment": "friction", "parameters": {"g": 0.0, "order": 2, "n_traj": 100, "times": [10]}}"#;
    for (i, body) in [trunc, flat].iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("num{i}.json"), body);
        let out = run(&cfg, dir.path(), &[]);
        assert_eq!(out.status.code(), Some(3), "{body}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn fit_reads_a_previous_table() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", FREE_DRIVE);
    assert!(run(&cfg, dir.path(), &[]).status.success());
    let fit = r#"{"experiment": "fit", "output_path": "slope",
        "parameters": {"input": "free.csv", "x": "T", "y": "qfi", "model": "power-law"}}"#;
    let cfg = write_config(dir.path(), "fit.json", fit);
    assert!(run(&cfg, dir.path(), &[]).status.success());
    assert!(!dir.path().join("slope.csv").exists());
    let meta = sidecar(&dir.path().join("slope.json"));
    let slope = meta["summary"]["fit"]["exponent_or_rate"].as_f64().unwrap();
    assert!((slope - 2.0).abs() < 1e-3, "{slope}");
}
