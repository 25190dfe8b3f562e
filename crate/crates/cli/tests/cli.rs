use std::path::Path;
use std::process::{Command, Output};

use edue_cli::{read_summary, EXIT_MAX_DNL, EXIT_MAX_ITERS};

fn edue(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edue")).args(args).output().unwrap()
}

fn solve(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["solve", "bundled:seven-arc", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    edue(&args)
}

#[test]
fn iteration_cap_exits_nonzero_with_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = solve(dir.path(), &["--max-iters", "1"]);
    assert_eq!(o.status.code(), Some(EXIT_MAX_ITERS));
    for f in ["history.csv", "final_point.csv", "violation.json", "summary.json"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let s = read_summary(&dir.path().join("summary.json")).unwrap();
    assert_eq!(s.iterations, 1);
    assert_eq!(s.termination, "max_iters");
    let history = std::fs::read_to_string(dir.path().join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 2);
    assert_eq!(history.lines().next().unwrap(), "k,gap,Q_1-6,vbar_1-6,dnl_calls");
}

#[test]
fn loading_cap_has_its_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = solve(dir.path(), &["--method", "sa", "--max-dnl", "3"]);
    assert_eq!(o.status.code(), Some(EXIT_MAX_DNL));
}

#[test]
fn optional_artifacts_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let o = solve(dir.path(), &["--max-iters", "2", "--dump-curves", "--gap-trace", "--timings"]);
    assert_eq!(o.status.code(), Some(EXIT_MAX_ITERS));
    assert!(dir.path().join("curves.csv").is_file());
    assert!(dir.path().join("gap_trace.csv").is_file());
    let history = std::fs::read_to_string(dir.path().join("history.csv")).unwrap();
    assert!(history.lines().next().unwrap().ends_with(",elapsed_s"));
}

#[test]
fn invalid_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = solve(dir.path(), &["--alpha=-1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = edue(&["solve", "no/such/file.json", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_and_load() {
    let o = edue(&["validate", "bundled:sioux-falls"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("76 links") && text.contains("119 paths"), "{text}");

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("field.csv");
    let o = edue(&["load", "bundled:seven-arc", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let field = std::fs::read_to_string(&out).unwrap();
    assert_eq!(field.lines().next().unwrap(), "path,k,t,h,d,psi");
    assert_eq!(field.lines().count(), 1 + 3 * 120);
}

#[test]
fn load_accepts_a_solved_profile() {
    let dir = tempfile::tempdir().unwrap();
    solve(dir.path(), &["--max-iters", "3"]);
    let out = dir.path().join("field.csv");
    let profile = dir.path().join("final_point.csv");
    let o = edue(&[
        "load",
        "bundled:seven-arc",
        "--profile",
        profile.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn probe_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("probe.json");
    let o = edue(&["probe", "bundled:seven-arc", "--samples", "4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!(v.is_object());
}

#[test]
fn compare_tabulates_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    solve(a.path(), &["--max-iters", "2"]);
    solve(b.path(), &["--method", "sa", "--max-iters", "2"]);
    let o = edue(&[
        "compare",
        a.path().join("summary.json").to_str().unwrap(),
        b.path().join("summary.json").to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("projection") && table.contains("self_adaptive"), "{table}");
    let o = edue(&["compare", a.path().join("summary.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
