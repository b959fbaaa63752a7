use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nacensor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nacensor"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_config(dir: &Path, edit: impl FnOnce(&mut serde_json::Value)) -> std::path::PathBuf {
    let mut v = serde_json::json!({
        "model": {
            "lifetime": { "family": "exponential", "rate": 1.0 },
            "censoring": { "family": "exponential", "rate": 0.5 }
        },
        "lifetime_scheme": { "kind": "permutation" },
        "censoring_scheme": { "kind": "iid" },
        "n_grid": [200, 800, 3200],
        "replications": 20,
        "kernel": "epanechnikov",
        "statistics": ["lemma1-F", "lemma2-r1", "theorem1"],
        "master_seed": 5,
        "checks": [
            { "statistic": "lemma1-F", "slope_min": 0.5, "slope_max": 1.5 },
            { "statistic": "lemma2-r1", "max_ratio_growth": 3.0 }
        ]
    });
    edit(&mut v);
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = nacensor(&["simulate", "--n", "1000", "--seed", "7", "--out", p(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn simulate_reports_censoring_fraction() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let o = nacensor(&["simulate", "--n", "4000", "--seed", "1", "--out", p(&out)]);
    assert!(o.status.success());
    let stdout = String::from_utf8(o.stdout).unwrap();
    let frac: f64 = stdout
        .trim()
        .strip_prefix("censoring fraction: ")
        .unwrap()
        .parse()
        .unwrap();
    // P(Y < T) = 0.5 / 1.5
    assert!((frac - 1.0 / 3.0).abs() < 0.05, "{frac}");
    assert!(fs::read_to_string(&out).unwrap().starts_with("{\"x\":"));
}

#[test]
fn simulate_rejects_empty_sample() {
    let dir = tempfile::tempdir().unwrap();
    let o = nacensor(&["simulate", "--n", "0", "--out", p(&dir.path().join("s.csv"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn estimate_small_sample() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.csv");
    let out = dir.path().join("out.csv");
    fs::write(&input, "time,status\n2,1\n3,0\n5,1\n7,1\n").unwrap();
    let o = nacensor(&["estimate", "--input", p(&input), "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let row5 = text.lines().find(|l| l.starts_with("5,")).unwrap();
    let survival: f64 = row5.split(',').nth(1).unwrap().parse().unwrap();
    assert!((survival - 0.375).abs() < 1e-15);
    assert_eq!(text.lines().next().unwrap(), "time,survival,cumhaz");
}

#[test]
fn estimate_all_censored() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.csv");
    let out = dir.path().join("out.csv");
    fs::write(&input, "time,status\n1.5,0\n0.5,0\n4,0\n").unwrap();
    assert!(nacensor(&["estimate", "--input", p(&input), "--out", p(&out)])
        .status
        .success());
    for line in fs::read_to_string(&out).unwrap().lines().skip(1) {
        assert_eq!(line.split(',').nth(1), Some("1"));
    }
}

#[test]
fn estimate_rejects_bad_status_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.csv");
    fs::write(&input, "time,status\n1,1\n2,2\n").unwrap();
    let o = nacensor(&["estimate", "--input", p(&input), "--out", p(&dir.path().join("o.csv"))]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn smooth_writes_curves() {
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("s.csv");
    let out = dir.path().join("f.csv");
    assert!(
        nacensor(&["simulate", "--n", "500", "--seed", "3", "--out", p(&sample)])
            .status
            .success()
    );
    let o = nacensor(&[
        "smooth",
        "--input",
        p(&sample),
        "--out",
        p(&out),
        "--kernel",
        "biweight",
        "--grid-size",
        "100",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,f_n,h_n"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r[1] >= 0.0 && r[2] >= 0.0));
}

#[test]
fn smooth_rejects_bad_bandwidth_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("s.csv");
    assert!(nacensor(&["simulate", "--n", "50", "--out", p(&sample)])
        .status
        .success());
    let o = nacensor(&[
        "smooth",
        "--input",
        p(&sample),
        "--out",
        p(&dir.path().join("f.csv")),
        "--beta",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_passes_and_report_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |_| {});
    let out = dir.path().join("run");
    let o = nacensor(&["--jobs", "2", "verify", "--config", p(&cfg), "--out-dir", p(&out)]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{stdout}{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(stdout.contains("PASS lemma1-F"));
    for f in ["records.csv", "summary.json", "lemma1-F.svg", "theorem1.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }

    let again = dir.path().join("again");
    let o = nacensor(&[
        "report",
        "--config",
        p(&cfg),
        "--records",
        p(&out.join("records.csv")),
        "--out-dir",
        p(&again),
        "--no-plots",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        fs::read(out.join("summary.json")).unwrap(),
        fs::read(again.join("summary.json")).unwrap()
    );
    assert!(!again.join("lemma1-F.svg").exists());
}

#[test]
fn verify_failed_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |v| {
        v["checks"] = serde_json::json!([{ "statistic": "lemma1-F", "slope_min": 5.0 }]);
    });
    let o = nacensor(&[
        "verify",
        "--config",
        p(&cfg),
        "--out-dir",
        p(&dir.path().join("o")),
        "--no-plots",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL lemma1-F"));
}

#[test]
fn verify_rejects_bad_bandwidth_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |v| {
        v["bandwidth"] = serde_json::json!({ "c": 1.0, "beta": 0.6 })
    });
    let o = nacensor(&["verify", "--config", p(&cfg), "--out-dir", p(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    // the same failure through the override flag
    let cfg = small_config(dir.path(), |_| {});
    let o = nacensor(&[
        "verify",
        "--config",
        p(&cfg),
        "--out-dir",
        p(&dir.path().join("o")),
        "--beta",
        "0.6",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_rejects_vanishing_denominator() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |v| {
        v["model"]["censoring"] = serde_json::json!({ "family": "exponential", "rate": 5.0 });
        v["tau_quantile"] = serde_json::json!(0.999);
    });
    let o = nacensor(&["verify", "--config", p(&cfg), "--out-dir", p(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("denominator"));
}

#[test]
fn verify_rejects_unknown_config_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |v| v["replicates"] = serde_json::json!(3));
    let o = nacensor(&["verify", "--config", p(&cfg), "--out-dir", p(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
}
