use std::process::{Command, Output};

fn ncdirac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncdirac")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn wick_crossing_word_gives_q() {
    let out = ncdirac(&["wick", "--q", "-0.3", "--word", "a,b,a,b", "--oracle"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("-0.3"), "{text}");
}

#[test]
fn fock_reports_fermionic_dimensions() {
    let out = ncdirac(&["fock", "--q", "-1", "--dim", "3", "--cap", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains('8'), "{text}");
}

#[test]
fn verify_small_system_passes() {
    let out = ncdirac(&["verify", "--system", "heat:2", "--q", "-1,0,1", "--samples", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let reports = stdout_json(&out);
    assert!(reports.as_array().is_some_and(|r| !r.is_empty()));
}

#[test]
fn unknown_system_is_a_usage_error() {
    assert_eq!(ncdirac(&["gap", "--system", "torus:3"]).status.code(), Some(2));
    assert_eq!(ncdirac(&["gap", "--system", "heat:x"]).status.code(), Some(2));
    assert_eq!(ncdirac(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn unwritable_report_path_exits_3() {
    let out = ncdirac(&["report", "--out", "/nonexistent-dir/sub/r.json", "--systems", "heat:2", "--q", "0"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn report_writes_csv() {
    let path = std::env::temp_dir().join(format!("ncdirac-report-{}.csv", std::process::id()));
    let out = ncdirac(&["report", "--out", path.to_str().unwrap(), "--format", "csv", "--systems", "heat:2,Zn:3", "--q", "0"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert!(csv.lines().count() > 2);
    assert!(csv.contains("heat:2") && csv.contains("Zn:3"));
}

#[test]
fn tolerance_override_can_force_failure() {
    let out = Command::new(env!("CARGO_BIN_EXE_ncdirac"))
        .args(["verify", "--system", "poisson:3", "--q", "0", "--suite", "gamma", "--samples", "2"])
        .env("NCDIRAC_TOL", "1e-40")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
