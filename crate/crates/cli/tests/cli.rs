use std::path::Path;
use std::process::{Command, Output};

fn locpen(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_locpen")).args(args).current_dir(dir).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const CONFIG: &str = "\
intervals = 0.2-0.4, 0.6-0.8
eta = 0.1
classes = intervals:1..3
n = 150
reps = 12
seed = 9
mc_draws = 40
log_shatter_reps = 10
";

#[test]
fn generate_then_select() {
    let dir = tempfile::tempdir().unwrap();
    let g = locpen(&["generate", "--n", "120", "--seed", "4", "--out", "s.csv"], dir.path());
    assert!(g.status.success(), "{g:?}");
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(text.lines().count(), 121);

    let s = locpen(&["select", "--data", "s.csv", "--classes", "intervals:1..4", "--penalty", "vapnik"], dir.path());
    assert!(s.status.success(), "{s:?}");
    let out = stdout(&s);
    assert_eq!(out.lines().filter(|l| l.trim_start().starts_with(char::is_numeric)).count(), 4);
    assert!(out.contains("vapnik: chose k = "));
}

#[test]
fn penalties_all_lists_every_kind() {
    let dir = tempfile::tempdir().unwrap();
    locpen(&["generate", "--n", "60", "--out", "s.csv"], dir.path());
    let p = locpen(&["penalties", "--data", "s.csv", "--classes", "intervals:1..2", "--all", "--mc-draws", "50"], dir.path());
    assert!(p.status.success(), "{p:?}");
    let out = stdout(&p);
    for kind in ["vapnik", "global", "simple", "localized"] {
        assert_eq!(out.matches(&format!("  {kind} ")).count(), 2, "{out}");
    }
}

#[test]
fn experiment_is_independent_of_workers() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("exp.cfg"), CONFIG).unwrap();
    let one = locpen(&["experiment", "--config", "exp.cfg", "--out", "a.csv", "--svg", "a.svg", "--workers", "1"], dir.path());
    let four = locpen(&["experiment", "--config", "exp.cfg", "--out", "b.csv", "--workers", "4"], dir.path());
    assert!(one.status.success(), "{one:?}");
    assert!(four.status.success(), "{four:?}");
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    let csv = String::from_utf8(a).unwrap();
    assert!(csv.starts_with("penalty,k,mean_emp_loss,"));
    assert_eq!(csv.lines().count(), 1 + 4 * 3);
    assert!(std::fs::read_to_string(dir.path().join("a.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn concentration_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let c = locpen(
        &["concentration", "--prop", "4.4", "--n", "10", "--eps", "0.05", "--reps", "300", "--out", "c.csv"],
        dir.path(),
    );
    assert!(c.status.success(), "{c:?}");
    assert_eq!(stdout(&c).lines().filter(|l| l.starts_with("PASS 4.4")).count(), 2);
    let csv = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn concentration_needs_eps_except_for_relative_vc() {
    let dir = tempfile::tempdir().unwrap();
    let c = locpen(&["concentration", "--prop", "3.3", "--n", "20", "--reps", "10"], dir.path());
    assert!(!c.status.success());
    assert!(String::from_utf8_lossy(&c.stderr).contains("--eps"));
    let bad = locpen(&["concentration", "--prop", "9.9", "--n", "20"], dir.path());
    assert!(!bad.status.success());
}

#[test]
fn config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), "n = 100\nbogus = 3\n").unwrap();
    let e = locpen(&["experiment", "--config", "bad.cfg", "--out", "r.csv"], dir.path());
    assert!(!e.status.success());
    let err = String::from_utf8_lossy(&e.stderr);
    assert!(err.contains("line 2"), "{err}");
    assert!(!dir.path().join("r.csv").exists());
}

#[test]
fn missing_data_file_reports_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let e = locpen(&["select", "--data", "nope.csv"], dir.path());
    assert!(!e.status.success());
    assert!(String::from_utf8_lossy(&e.stderr).contains("nope.csv"));
}
