use std::path::Path;
use std::process::{Command, Output};

use ailc::harness::{builtin, read_trace_csv, CSV_HEADER};

fn ailc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ailc")).args(args).output().expect("binary runs")
}

fn summary(dir: &Path, name: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join(format!("{name}.summary.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn list_names_every_builtin() {
    let out = ailc(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["example1-compare", "example1-robust-d4", "example2-dist"] {
        assert!(text.contains(name), "{name} missing from:\n{text}");
    }
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(ailc(&["run", "no-such-scenario"]).status.code(), Some(1));
    assert_eq!(ailc(&["run", "example2-dist", "--bogus"]).status.code(), Some(1));
    assert_eq!(ailc(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(ailc(&["--help"]).status.code(), Some(0));
}

#[test]
fn invalid_config_reports_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[run]\nname = \"x\"\niterations = 0\n").unwrap();
    let out = ailc(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn csv_output_reproduces_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = ailc(&["run", "example1-compare", "--iterations", "4", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sum = summary(dir.path(), "example1-compare");
    for (i, ctrl) in ["ailc", "ddilc"].iter().enumerate() {
        let text = std::fs::read_to_string(dir.path().join(format!("example1-compare.{ctrl}.ch0.csv"))).unwrap();
        assert_eq!(text.lines().next(), Some(CSV_HEADER));
        let rows = read_trace_csv(&text).unwrap();
        let ch = &sum["controllers"][i]["channels"][0];
        assert_eq!(sum["controllers"][i]["controller"], *ctrl);
        for k in 1..=4u64 {
            let errs: Vec<f64> = rows.iter().filter(|r| r.k == k).map(|r| r.e.abs()).collect();
            assert_eq!(errs.len(), 50);
            let max = errs.iter().copied().fold(0.0, f64::max);
            let avg = errs.iter().sum::<f64>() / errs.len() as f64;
            let want_max = ch["max_err"][k as usize - 1].as_f64().unwrap();
            let want_avg = ch["avg_err"][k as usize - 1].as_f64().unwrap();
            assert_eq!(max, want_max, "{ctrl} k={k}");
            assert!((avg - want_avg).abs() <= 1e-15 * (1.0 + want_avg), "{ctrl} k={k}");
        }
    }
}

#[test]
fn config_file_matches_builtin_and_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = builtin("example2-dist").unwrap();
    let path = dir.path().join("pendulum.toml");
    std::fs::write(&path, cfg.to_toml()).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let run = |target: &str, out: &Path| {
        let o = ailc(&["run", target, "--iterations", "3", "--seed", "9", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    run(path.to_str().unwrap(), &a);
    run("example2-dist", &b);
    for c in 0..2 {
        let file = format!("example2-dist.ailc.ch{c}.csv");
        let x = std::fs::read(a.join(&file)).unwrap();
        let y = std::fs::read(b.join(&file)).unwrap();
        assert_eq!(x, y, "{file}");
    }
    let sum = summary(&a, "example2-dist");
    assert_eq!(sum["seed"], 9);
    assert_eq!(sum["iterations"], 3);
}

#[test]
fn json_format_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = ailc(&["run", "example2-nodist", "--iterations", "1", "--format", "json", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("example2-nodist.ailc.ch1.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v.is_array() || v.is_object());

    let o = ailc(&["check", "--scenario", "example2-nodist", "--samples", "50"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.is_object() || v.is_array());
}
