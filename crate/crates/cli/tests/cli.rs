use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ckm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ckm")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| match l.split_whitespace().collect::<Vec<_>>()[..] {
            [k, v] if k == key => v.parse().ok(),
            _ => None,
        })
        .unwrap_or_else(|| panic!("no {key} in output:\n{text}"))
}

struct TempDir(PathBuf);

impl TempDir {
    fn new(name: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("ckm-cli-{name}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        Self(dir)
    }

    fn file(&self, name: &str) -> String {
        self.0.join(name).to_str().unwrap().to_owned()
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn gap_file(dir: &TempDir) -> String {
    let path = dir.file("g.ckm");
    let out = ckm(&["gen", "--gap", "2", "--L", "100", "-o", &path]);
    assert!(out.status.success());
    assert!(Path::new(&path).exists());
    path
}

#[test]
fn gap_lp_value_is_zero() {
    let dir = TempDir::new("lp");
    let g = gap_file(&dir);
    let out = ckm(&["lp", &g]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "lp_value 0\n");
}

#[test]
fn basic_round_writes_solution_within_four_k() {
    let dir = TempDir::new("round");
    let g = gap_file(&dir);
    let sol = dir.file("g.sol");
    let out = ckm(&["round", "--mode", "basic", &g, "-o", &sol]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout(&out);
    assert!(value(&report, "opened_total") <= 4.0 * value(&report, "k"));
    let text = std::fs::read_to_string(&sol).unwrap();
    assert!(text.starts_with("ckm-sol v1\n"));
    let check = ckm(&["check", &g, "--solution", &sol]);
    assert_eq!(check.status.code(), Some(0), "{}", stdout(&check));
}

#[test]
fn solve_on_gap_emits_a_cut() {
    let dir = TempDir::new("solve");
    let g = gap_file(&dir);
    let out = ckm(&["solve", "--epsilon", "1", "--seed", "1", &g]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout(&out);
    assert!(value(&report, "cuts_emitted") >= 1.0);
    assert!(value(&report, "cost") >= 100.0);
}

#[test]
fn config_round_without_cuts_fails_on_gap() {
    let dir = TempDir::new("config");
    let g = gap_file(&dir);
    let out = ckm(&["round", "--mode", "config", &g]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = TempDir::new("determinism");
    let path = dir.file("r.ckm");
    let gen = ckm(&["gen", "--random", "6,10,3", "--seed", "9", "-o", &path]);
    assert!(gen.status.success());
    let a = ckm(&["solve", "--seed", "4", &path]);
    let b = ckm(&["solve", "--seed", "4", &path]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let g1 = ckm(&["gen", "--random", "6,10,3", "--seed", "9"]);
    assert_eq!(stdout(&g1), std::fs::read_to_string(&path).unwrap());
}

#[test]
fn exact_matches_gap_bound() {
    let dir = TempDir::new("exact");
    let g = gap_file(&dir);
    let out = ckm(&["exact", &g]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(value(&stdout(&out), "opt_cost"), 100.0);
}

#[test]
fn bench_rows_are_consistent() {
    let out = ckm(&["bench", "--random", "5,8,3", "--from", "1", "--to", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let f: Vec<&str> = row.split('\t').collect();
        assert_eq!(f.len(), 8);
        let lp: f64 = f[1].parse().unwrap();
        let opt: f64 = f[2].parse().unwrap();
        let soft: f64 = f[7].parse().unwrap();
        assert!(lp <= opt + 1e-9);
        assert!(soft <= opt);
        if let Ok(config) = f[4].parse::<f64>() {
            assert!(config >= lp - 1e-9);
        }
    }
}

#[test]
fn input_errors_exit_with_two() {
    let dir = TempDir::new("errors");
    let g = gap_file(&dir);
    assert_eq!(ckm(&["solve", "--epsilon", "3", &g]).status.code(), Some(2));
    assert_eq!(ckm(&["solve", "--epsilon", "0", &g]).status.code(), Some(2));
    assert_eq!(ckm(&["lp", &dir.file("missing.ckm")]).status.code(), Some(2));
    let bad = dir.file("bad.ckm");
    std::fs::write(&bad, "ckm v2\n").unwrap();
    assert_eq!(ckm(&["lp", &bad]).status.code(), Some(2));
    assert_eq!(ckm(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn exhausted_iterations_exit_with_one() {
    let dir = TempDir::new("iters");
    let g = gap_file(&dir);
    assert_eq!(ckm(&["solve", "--max-iters", "1", &g]).status.code(), Some(1));
}
