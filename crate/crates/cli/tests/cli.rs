use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const PD: &str = "A -> AB\nB -> AA\n";
const FIB: &str = "a -> ab\nb -> a\n";
const CHACON: &str = "0 -> 0010\n1 -> 1\n";

fn iietlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iietlab"))
        .args(args)
        .env_remove("IIETLAB_PRECISION")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn file(dir: &TempDir, name: &str, contents: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, contents).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn assert_error(o: &Output, code: i32) {
    assert_eq!(o.status.code(), Some(code), "stderr: {}", stderr(o));
    assert_eq!(stderr(o).trim_end().lines().count(), 1);
    assert!(stdout(o).is_empty());
}

#[test]
fn analyze_period_doubling() {
    let dir = TempDir::new().unwrap();
    let pd = file(&dir, "pd.sub", PD);
    let o = iietlab(&["analyze", s(&pd)]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("M = [[1,2],[1,0]]"));
    assert!(out.contains("lambda = 2\n"));
    assert!(out.contains("r = (0.66666666666666663, 0.33333333333333337)"));
    assert!(out.contains("labels: 4"));
    assert!(out.contains("T_A = {A1,B1,B2}"));
    assert!(out.contains("dual orders: 6"));
}

#[test]
fn coincidence_outcomes() {
    let dir = TempDir::new().unwrap();
    let pd = file(&dir, "pd.sub", PD);
    let o = iietlab(&["coincidence", s(&pd)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "coincidence at N=1, j=1 (letter A)\n");

    let tm = file(&dir, "tm.sub", "a -> ab\nb -> ba\n");
    assert_eq!(
        stdout(&iietlab(&["coincidence", s(&tm)])),
        "no coincidence\n"
    );

    let fib = file(&dir, "fib.sub", FIB);
    assert_error(&iietlab(&["coincidence", s(&fib)]), 4);
}

#[test]
fn error_exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = file(&dir, "bad.sub", "A -> AB\nA -> B\n");
    assert_error(&iietlab(&["analyze", s(&bad)]), 2);

    let missing = dir.path().join("missing.sub");
    assert_error(&iietlab(&["analyze", s(&missing)]), 2);

    let chacon = file(&dir, "chacon.sub", CHACON);
    assert_error(&iietlab(&["analyze", s(&chacon)]), 4);
    assert!(iietlab(&["--assume-minimal", "analyze", s(&chacon)])
        .status
        .success());
    let cfg = file(&dir, "c.json", r#"{"assume_minimal": true}"#);
    assert!(iietlab(&["analyze", s(&chacon), "--config", s(&cfg)])
        .status
        .success());

    let pd = file(&dir, "pd.sub", PD);
    let bad_cfg = file(&dir, "bad.json", r#"{"dual_order": {"A": ["A1", "B1"]}}"#);
    assert_error(&iietlab(&["analyze", s(&pd), "--config", s(&bad_cfg)]), 2);

    let out = dir.path().join("x.csv");
    let o = iietlab(&[
        "iet",
        s(&pd),
        "--level",
        "20",
        "--power",
        "4096",
        "--max-pieces",
        "10",
        "--out",
        s(&out),
    ]);
    assert_error(&o, 5);

    let o = iietlab(&["eval", s(&pd), "--x", "1.5"]);
    assert_error(&o, 2);

    let o = Command::new(env!("CARGO_BIN_EXE_iietlab"))
        .args(["analyze", s(&pd)])
        .env("IIETLAB_PRECISION", "binary128")
        .output()
        .unwrap();
    assert_error(&o, 2);
}

#[test]
fn config_file_changes_dual_order() {
    let dir = TempDir::new().unwrap();
    let pd = file(&dir, "pd.sub", PD);
    let cfg = file(
        &dir,
        "c.json",
        r#"{"initial_order": ["B", "A"], "dual_order": {"A": ["B2", "A1", "B1"]}}"#,
    );
    let o = iietlab(&["analyze", s(&pd), "--config", s(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("dual order B2,A1,B1"));
    assert!(out.contains("Phi0(B) = 0\n"));
}

#[test]
fn iet_table_and_determinism() {
    let dir = TempDir::new().unwrap();
    let pd = file(&dir, "pd.sub", PD);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let o = iietlab(&["iet", s(&pd), "--level", "1", "--out", s(&a)]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("pieces: 4 (expected 4)"));
    let csv = fs::read_to_string(&a).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[1].starts_with("0,0.33333333333333331,0.66666666666666663,1,A1"));
    iietlab(&["iet", s(&pd), "--level", "1", "--out", s(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let merged = dir.path().join("m.csv");
    let o = iietlab(&[
        "iet",
        s(&pd),
        "--level",
        "6",
        "--power",
        "4",
        "--merge",
        "1e-9",
        "--out",
        s(&merged),
    ]);
    assert!(o.status.success());
}

#[test]
fn eval_reports_orbit() {
    let dir = TempDir::new().unwrap();
    let pd = file(&dir, "pd.sub", PD);
    let o = iietlab(&["eval", s(&pd), "--x", "0.25", "--power", "2"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 2);
    assert!(out.starts_with("1: 0.25 -> 0.91666666666666663  address A1  level 1"));
}

#[test]
fn figures_are_well_formed() {
    let dir = TempDir::new().unwrap();
    let pd = file(&dir, "pd.sub", PD);
    let fv = dir.path().join("fv.svg");
    let o = iietlab(&[
        "flowview",
        s(&pd),
        "--level",
        "2",
        "--window",
        "4",
        "--out",
        s(&fv),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("bands: 8\n"));
    let svg = fs::read_to_string(&fv).unwrap();
    assert!(svg.starts_with("<?xml"));
    assert_eq!(svg.matches(r#"class="band""#).count(), 8);

    let g = dir.path().join("g.svg");
    let o = iietlab(&[
        "ietgraph",
        s(&pd),
        "--level",
        "3",
        "--connectors",
        "--out",
        s(&g),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("segments: 8\n"));
    assert_eq!(
        fs::read_to_string(&g)
            .unwrap()
            .matches(r#"class="piece""#)
            .count(),
        8
    );

    let c = dir.path().join("g.csv");
    iietlab(&[
        "ietgraph",
        s(&pd),
        "--level",
        "3",
        "--format",
        "csv",
        "--out",
        s(&c),
    ]);
    assert_eq!(fs::read_to_string(&c).unwrap().lines().count(), 9);

    let o = iietlab(&[
        "flowview",
        s(&pd),
        "--level",
        "2",
        "--window",
        "0.5",
        "--out",
        s(&fv),
    ]);
    assert_error(&o, 2);
}

#[test]
fn spectral_and_convergence_tables() {
    let dir = TempDir::new().unwrap();
    let pd = file(&dir, "pd.sub", PD);
    let sp = dir.path().join("s.csv");
    let o = iietlab(&[
        "spectral",
        s(&pd),
        "--level",
        "12",
        "--powers",
        "0,1",
        "--out",
        s(&sp),
    ]);
    assert!(o.status.success());
    let csv = fs::read_to_string(&sp).unwrap();
    assert!(csv.starts_with("j,value,error_bound,level\n0,0.33333333333333331,0,12\n"));

    let cv = dir.path().join("c.csv");
    let o = iietlab(&[
        "convergence",
        s(&pd),
        "--samples",
        "20",
        "--exps",
        "2..4",
        "--out",
        s(&cv),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&cv).unwrap().lines().count(), 1 + 20 * 3);
    assert!(stdout(&o).contains("e=4 median distance"));
}

#[test]
fn selfsim_reports_sign() {
    let dir = TempDir::new().unwrap();
    let r = file(&dir, "r.sub", "A -> BBA\nB -> BA\n");
    let o = iietlab(&["selfsim", s(&r), "--level", "20", "--grid", "1000"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("passing: F(x) = lambda(F(x/lambda) - kappa)"));

    let fib = file(&dir, "fib.sub", FIB);
    assert_error(&iietlab(&["selfsim", s(&fib)]), 4);
}

#[test]
fn duals_listing_and_search() {
    let dir = TempDir::new().unwrap();
    let pd = file(&dir, "pd.sub", PD);
    let o = iietlab(&["duals", s(&pd), "--enumerate"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("dual orders: 6\n"));
    assert_eq!(out.lines().count(), 7);

    let fib = file(&dir, "fib.sub", FIB);
    let o = iietlab(&["duals", s(&fib), "--fib2-search"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("a -> aba\nb -> ab\n"));
    assert_eq!(out.matches("merged [").count(), 24);
    assert!(out.contains("two-piece off wrap slivers: 2"));
}
