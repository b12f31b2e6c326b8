use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_betastein"))
        .args(args)
        .env_remove("BETASTEIN_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn every_subcommand_has_help() {
    for args in [
        &["--help"][..],
        &["solve", "--help"],
        &["constants", "--help"],
        &["bounds", "--help"],
        &["polya", "check", "--help"],
        &["polya", "simulate", "--help"],
        &["rate-study", "--help"],
        &["framework", "density", "--help"],
        &["mills-check", "--help"],
        &["exp-check", "--help"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        assert!(stdout(&o).contains("Usage"), "{args:?}");
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    assert_eq!(run(&["constants", "--a", "-1", "--b", "2"]).status.code(), Some(2));
    assert_eq!(run(&["solve", "--a", "2", "--b", "3", "--h", "nosuch"]).status.code(), Some(2));
}

#[test]
fn arcsine_constant_is_four() {
    let o = run(&["constants", "--a", "0.5", "--b", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "4");
}

#[test]
fn polya_check_passes() {
    let o = run(&["polya", "check", "--a", "2", "--b", "3", "--n", "100"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn rate_study_prints_csv() {
    let o = run(&["rate-study", "--a", "2", "--b", "3", "--h", "x2", "--n", "10,20,50"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,distance,bound"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn solve_includes_endpoints() {
    let o = run(&["solve", "--a", "2", "--b", "3", "--h", "x", "--points", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("x,g,g_prime"));
    assert_eq!(text.lines().count(), 1 + 3 + 2);
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for (i, threads) in ["1", "4"].iter().enumerate() {
        let path = dir.path().join(format!("sim{i}.json"));
        let o = Command::new(env!("CARGO_BIN_EXE_betastein"))
            .args(["polya", "simulate", "--a", "2", "--b", "3", "--n", "20", "--reps", "50000", "--seed", "7"])
            .env("BETASTEIN_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        files.push(o.stdout);
        let r = run(&["rate-study", "--a", "0.5", "--b", "3.7", "--h", "sin", "--n", "5,20,100", "--output", path.to_str().unwrap()]);
        assert_eq!(r.status.code(), Some(0));
        files.push(fs::read(&path).unwrap());
    }
    assert_eq!(files[0], files[2], "simulation output depends on thread count");
    assert_eq!(files[1], files[3]);
}

#[test]
fn unwritable_report_path_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("r.json");
    let o = run(&["mills-check", "--output", path.to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing"));
}

#[test]
fn checks_pass() {
    for args in [
        &["mills-check"][..],
        &["exp-check", "--alpha", "2", "--h", "smoothstep"],
        &["framework", "density", "--dist", "beta:2,3"],
        &["bounds", "--a", "0.5", "--b", "2", "--h", "sin", "--order", "2"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}
