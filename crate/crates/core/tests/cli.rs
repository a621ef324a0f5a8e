use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sdnmc"))
}

fn scn(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn holds_exits_zero() {
    let o = run(&["--scenario", path(&scn("cp1_fixed_2sw.scn")), "--stats"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("verdict=holds"));
    for key in ["visited=", "transitions=", "bytes_per_state=", "states_per_sec=", "wall_ms="] {
        assert!(out.contains(key), "missing {key}");
    }
}

#[test]
fn violation_exits_one_and_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("cx.txt");
    let s = scn("cp1_buggy_2sw.scn");
    let o = run(&["--scenario", path(&s), "--full", "--emit-trace", trace.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("verdict=violated"));
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("step 1: send("));
    assert!(text.contains("\nviolation:\n"));
    let json = dir.path().join("cx.txt.json");
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(doc["violation"]["kind"], "invariant");

    let o = run(&["replay", json.to_str().unwrap(), "--scenario", path(&s)]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("violation reproduced"));

    let fixed = scn("cp1_fixed_2sw.scn");
    let o = run(&["replay", json.to_str().unwrap(), "--scenario", path(&fixed)]);
    assert_ne!(o.status.code(), Some(1));
}

#[test]
fn budget_exits_two() {
    let o = run(&["--scenario", path(&scn("cp1_fixed_2sw.scn")), "--por", "off", "--max-states", "50"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("resource-limit"));
}

#[test]
fn usage_errors_exit_three() {
    assert_eq!(run(&["--bogus"]).status.code(), Some(3));
    assert_eq!(run(&[]).status.code(), Some(3));
    assert_eq!(run(&["--scenario", "/nonexistent.scn"]).status.code(), Some(3));
    assert_eq!(run(&["--scenario", path(&scn("cp1_fixed_2sw.scn")), "--por", "maybe"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.scn");
    std::fs::write(&bad, "[topology]\nswitches = A\n").unwrap();
    let o = run(&["--scenario", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("property required"));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn validate_por_reports_conditions() {
    let o = run(&["--scenario", path(&scn("cp3_maclearn_2x2.scn")), "--validate-por"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("c1=0 c3=0 c4=0"), "{out}");
    assert!(out.contains("verdict=holds"));
}

#[test]
fn compare_and_merge_modes() {
    let s = scn("cp1_buggy_2sw.scn");
    let o = run(&["compare", "--scenario", path(&s)]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("verdicts_equal=true"));
    assert!(out.contains("reduced_subset_of_full=true"));

    let o = run(&["--scenario", path(&s), "--merge-chains", "on", "--stats"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["--scenario", path(&s), "--threads", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn order_check_reports_declared_and_observed() {
    let o = run(&["order-check", "--scenario", path(&scn("cp3_maclearn_2x2.scn"))]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("declared_order_sensitive=true"));
    assert!(out.contains("observed=sensitive"));
    assert!(out.contains("witness=ctrl("));

    let o = run(&["order-check", "--scenario", path(&scn("cp1_fixed_2sw.scn"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("observed=insensitive"));
}

#[test]
fn dump_is_stable() {
    let s = scn("cp5_consistent_fixed.scn");
    let a = stdout(&run(&["dump", "--scenario", path(&s)]));
    let b = stdout(&run(&["dump", "--scenario", path(&s)]));
    assert_eq!(a, b);
    assert!(a.trim().chars().all(|c| c.is_ascii_hexdigit()) && !a.trim().is_empty());
}

#[test]
fn bench_suite_table() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("s.suite");
    std::fs::write(&suite, "family = cp3\nsizes = 2x2\nmodes = por full\nmax_states = 200000\n").unwrap();
    let o = run(&["bench", suite.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("family\tsize\tmode"));
    assert!(lines[1].starts_with("cp3\t2x2\tpor\tholds\t"));
    assert!(lines[2].starts_with("cp3\t2x2\tfull\tholds\t66921\t"));

    let shipped = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/maclearn_small.suite");
    assert!(shipped.exists());
}
