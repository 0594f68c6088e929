//! The command-line front end, run as a subprocess.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circleforge"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("CIRCLEFORGE_BUDGET_MB")
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

/// Data lines of a CSV report, without the stamp comment.
fn rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

#[test]
fn count_sums_of_two_squares() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["count", "--set", "n_max=100", "--set", "s=[2]"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(dir.path(), "count_s2.csv");
    assert!(csv.lines().nth(1) == Some("n,count"));
    assert!(rows(&csv).contains(&"25,2"));
    assert!(rows(&csv).contains(&"50,3"));
}

#[test]
fn dist_on_primes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["dist", "--set", "set.kind=primes", "--set", "q_max=10"], dir.path());
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&read(dir.path(), "dist.json")).unwrap();
    assert_eq!(v["kappa"]["3"]["1"], "1/2");
    assert_eq!(v["kappa"]["10"]["3"], "1/4");
    assert_eq!(v["condition_c"]["all_hold"], true);
    assert_eq!(v["meta"]["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn predict_with_unit_constants() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "predict", "--set", "s=[5]", "--set", "n_min=2", "--set", "n_max=60",
            "--set", "predict.series=1", "--set", "predict.integral=1",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(dir.path(), "predict.csv");
    for line in rows(&csv) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let want = f[0].powf(1.5);
        assert!((f[1] - want).abs() <= 1e-12 * want, "{line}");
    }
}

#[test]
fn json_format_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.json");
    std::fs::write(&cfg, r#"{"k": 3, "s": [2], "n_max": 200}"#).unwrap();
    let o = run(&["count", "--config", cfg.to_str().unwrap(), "--format", "json"], &dir.path().join("r"));
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&read(&dir.path().join("r"), "count_s2.json")).unwrap();
    assert_eq!(v["columns"], serde_json::json!(["n", "count"]));
    let row = v["rows"].as_array().unwrap().iter().find(|r| r[0] == "9").unwrap();
    assert_eq!(row[1], "2");
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"k": 2, "colour": "red"}"#).unwrap();
    for args in [
        vec!["count", "--config", bad.to_str().unwrap()],
        vec!["count", "--config", "/nonexistent/scenario.json"],
        vec!["count", "--set", "k=0"],
        vec!["count", "--set", "predict.theorem=cubic"],
        vec!["frobnicate"],
    ] {
        let o = run(&args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn non_convergence_exits_3_and_keeps_partial_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["singular", "--set", "target=3", "--set", "h_max=1", "--set", "p_max=5", "--set", "q_max=20"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(dir.path().join("series_terms.csv").exists());
}

#[test]
fn reports_are_deterministic_and_stamped() {
    let args = [
        "compare", "--set", "s=[4]", "--set", "n_min=100", "--set", "n_max=900", "--set", "n_samples=9",
        "--set", "q_max=30", "--seed", "5", "--threads", "1",
    ];
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run(&args, a.path()).status.success());
    assert!(run(&args, b.path()).status.success());
    for name in ["compare.csv", "compare.json"] {
        let (x, y) = (read(a.path(), name), read(b.path(), name));
        assert_eq!(x, y, "{name}");
    }
    let stamp: serde_json::Value = serde_json::from_str(&read(a.path(), "compare.json")).unwrap();
    let hash = stamp["meta"]["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(read(a.path(), "compare.csv").starts_with(&format!("# circleforge {} config {hash}", env!("CARGO_PKG_VERSION"))));
    let csv = read(a.path(), "compare.csv");
    assert_eq!(csv.lines().nth(1), Some("n,exact,predicted,ratio"));
    assert_eq!(rows(&csv).len(), 9);
    // a different seed samples different n
    let c = tempfile::tempdir().unwrap();
    let mut other = args.to_vec();
    let i = other.len() - 3;
    other[i] = "6";
    assert!(run(&other, c.path()).status.success());
    assert_ne!(read(c.path(), "compare.csv"), read(a.path(), "compare.csv"));
}
