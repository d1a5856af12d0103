use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BOCHNER: &str = "kind = bochner\nN = 256\nL = 64\nn_max = 5\ninstances = 2\n";

fn tfa(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfa")).current_dir(dir).args(args).env_remove("TFA_THREADS").output().unwrap()
}

fn setup(config: &str) -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("run.cfg"), config).unwrap();
    dir
}

fn summary(dir: &Path, out: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(out).join("summary.json")).unwrap()).unwrap()
}

#[test]
fn passing_run_writes_a_summary() {
    let dir = setup(BOCHNER);
    let out = tfa(dir.path(), &["bochner", "--config", "run.cfg", "--out", "o", "--seed", "12"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path(), "o");
    assert_eq!(s["schema"], 1);
    assert_eq!(s["kind"], "bochner");
    assert_eq!(s["seed"], 12);
    assert_eq!(s["passed"], true);
    assert!(s.get("wall_time").is_none());
    assert!(!dir.path().join("o/failures.json").exists());
    for name in ["domination.csv", "shells.csv", "symbol.txt"] {
        assert!(dir.path().join("o").join(name).exists(), "{name}");
    }
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().all(|l| l.starts_with("PASS ")));
}

#[test]
fn timing_adds_the_wall_time() {
    let dir = setup(BOCHNER);
    let out = tfa(dir.path(), &["bochner", "--config", "run.cfg", "--out", "o", "--timing"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(summary(dir.path(), "o")["wall_time"].as_f64().unwrap() >= 0.0);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = setup(BOCHNER);
    for o in ["a", "b"] {
        assert_eq!(tfa(dir.path(), &["bochner", "--config", "run.cfg", "--out", o]).status.code(), Some(0));
    }
    let mut names: Vec<_> = fs::read_dir(dir.path().join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(!names.is_empty());
    for n in names {
        let a = fs::read(dir.path().join("a").join(&n)).unwrap();
        let b = fs::read(dir.path().join("b").join(&n)).unwrap();
        assert!(a == b, "{n:?} differs");
    }
}

#[test]
fn failed_checks_exit_one_with_failures_json() {
    let dir = setup("kind = counterexample\n");
    let out = tfa(dir.path(), &["counterexample", "--config", "run.cfg", "--out", "o"]);
    assert_eq!(out.status.code(), Some(1));
    let f: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("o/failures.json")).unwrap()).unwrap();
    let list = f.as_array().unwrap();
    assert!(!list.is_empty());
    assert!(list.iter().all(|c| c["passed"] == false));
    assert_eq!(summary(dir.path(), "o")["passed"], false);
    assert!(String::from_utf8(out.stdout).unwrap().contains("FAIL "));
}

#[test]
fn stale_failures_are_removed_on_a_pass() {
    let dir = setup("kind = bochner\nN = 256\nL = 64\nn_max = 3\ninstances = 2\n");
    assert_eq!(tfa(dir.path(), &["bochner", "--config", "run.cfg", "--out", "o"]).status.code(), Some(1));
    assert!(dir.path().join("o/failures.json").exists());
    fs::write(dir.path().join("run.cfg"), BOCHNER).unwrap();
    assert_eq!(tfa(dir.path(), &["bochner", "--config", "run.cfg", "--out", "o"]).status.code(), Some(0));
    assert!(!dir.path().join("o/failures.json").exists());
}

#[test]
fn parse_errors_name_the_line() {
    let dir = setup("kind = bochner\n# grid\nN = 100\n");
    let out = tfa(dir.path(), &["bochner", "--config", "run.cfg", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 3"), "{err}");
    assert!(!dir.path().join("o/summary.json").exists());

    let dir = setup("kind = bochner\nwidth = 3\n");
    let out = tfa(dir.path(), &["bochner", "--config", "run.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 2"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = setup(BOCHNER);
    assert_eq!(tfa(dir.path(), &["no-such-kind", "--config", "run.cfg"]).status.code(), Some(2));
    assert_eq!(tfa(dir.path(), &["bochner", "--config", "missing.cfg"]).status.code(), Some(2));
    assert_eq!(tfa(dir.path(), &["bochner"]).status.code(), Some(2));
    let zero = Command::new(env!("CARGO_BIN_EXE_tfa"))
        .current_dir(dir.path())
        .args(["bochner", "--config", "run.cfg"])
        .env("TFA_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(zero.status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = setup(BOCHNER);
    for (o, t) in [("one", "1"), ("four", "4")] {
        let out = Command::new(env!("CARGO_BIN_EXE_tfa"))
            .current_dir(dir.path())
            .args(["bochner", "--config", "run.cfg", "--out", o])
            .env("TFA_THREADS", t)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
    }
    let a = fs::read(dir.path().join("one/summary.json")).unwrap();
    let b = fs::read(dir.path().join("four/summary.json")).unwrap();
    assert!(a == b);
}
