use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

struct Run {
    out: PathBuf,
    output: Output,
}

impl Run {
    fn code(&self) -> i32 {
        self.output.status.code().unwrap()
    }

    fn file(&self, name: &str) -> String {
        std::fs::read_to_string(self.out.join(name)).unwrap()
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&self.file(name)).unwrap()
    }

    fn csv(&self, name: &str) -> Vec<Vec<String>> {
        self.file(name).lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
    }

    fn stderr_record(&self) -> Value {
        serde_json::from_str(String::from_utf8_lossy(&self.output.stderr).trim()).unwrap()
    }
}

fn fockmetro(dir: &Path, cmd: &str, config: &str, extra: &[&str]) -> Run {
    let cfg = dir.join(format!("{cmd}.toml"));
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join(format!("out-{cmd}-{}", extra.join("_")));
    let output = Command::new(env!("CARGO_BIN_EXE_fockmetro"))
        .args([cmd, "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    Run { out, output }
}

fn f(cell: &str) -> f64 {
    cell.parse().unwrap()
}

#[test]
fn qfi_sweep_matches_bound() {
    let dir = tempfile::tempdir().unwrap();
    let run = fockmetro(dir.path(), "qfi", "[qfi]\nalpha_sq = 100.0\nnbar = [0.0, 1.0, 2.0, 4.0]\n", &[]);
    assert_eq!(run.code(), 0);
    let rows = run.csv("qfi.csv");
    assert_eq!(rows.len(), 4);
    for row in &rows {
        assert!((f(&row[4]) - f(&row[5])).abs() < 1e-9 * f(&row[5]));
    }
    assert!((f(&rows[0][4]) - 100.0).abs() < 1e-9 && (f(&rows[0][5]) - 100.0).abs() < 1e-12);
    assert!(run.out.join("config_echo.toml").exists());
}

#[test]
fn empty_sweep_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let run = fockmetro(dir.path(), "qfi", "[qfi]\nalpha_sq = 100.0\nnbar = []\n", &[]);
    assert_eq!(run.code(), 1);
    let rec = run.stderr_record();
    assert_eq!(rec["kind"], "validation");
    assert_eq!(rec["message"], "empty sweep");
}

#[test]
fn unknown_keys_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let run = fockmetro(dir.path(), "qfi", "[qfi]\nalpha_sq = 1.0\nnbar = 1.0\nnbr = 2\n", &[]);
    assert_eq!(run.code(), 1);
    assert!(run.stderr_record()["message"].as_str().unwrap().contains("`nbr`"));
}

#[test]
fn truncation_failure_is_numerical() {
    let dir = tempfile::tempdir().unwrap();
    let run = fockmetro(dir.path(), "qfi", "[qfi]\nalpha_sq = 100.0\nnbar = 1.0\n", &["--dim", "8"]);
    assert_eq!(run.code(), 2);
    assert_eq!(run.stderr_record()["exit_code"], 2);
}

const OPTIMIZE: &str = "seed = 3\ndim = 40\n[optimize]\nalpha_sq = 100.0\nnbar = 1.0\nrestarts = 2\n";

#[test]
fn optimize_reaches_squeezed_vacuum_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = fockmetro(dir.path(), "optimize", OPTIMIZE, &[]);
    let b = fockmetro(dir.path(), "optimize", OPTIMIZE, &["--threads", "2"]);
    assert_eq!(a.code(), 0);
    let report = a.json("report.json");
    assert!(report["fidelity_to_squeezed"].as_f64().unwrap() >= 0.999);
    assert_eq!(a.file("report.json"), b.file("report.json"));
    assert_eq!(a.file("chi_opt.csv"), b.file("chi_opt.csv"));
    assert!(b.file("config_echo.toml").contains("threads = 2"));
    assert!(a.csv("chi_opt.csv").len() >= 40);
}

#[test]
fn optimize_rejects_infeasible_budget() {
    let dir = tempfile::tempdir().unwrap();
    let run = fockmetro(dir.path(), "optimize", "dim = 6\n[optimize]\nalpha_sq = 1.0\nnbar = 6.0\n", &[]);
    assert_eq!(run.code(), 1);
}

#[test]
fn cfi_matches_qfi_for_real_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[cfi]\nalpha = 1.5\nr = 0.4\nphi_sweep = { start = 0.1, stop = 3.0, points = 12 }\n";
    let run = fockmetro(dir.path(), "cfi", cfg, &[]);
    assert_eq!(run.code(), 0);
    let rows = run.csv("cfi.csv");
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| f(&r[4]) < 1e-5 && f(&r[2]) <= f(&r[1])));
}

#[test]
fn cfi_of_coherent_and_vacuum_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let run = fockmetro(dir.path(), "cfi", "[cfi]\nalpha = 2.0\nphi = [0.3, 1.2, 2.5]\n", &[]);
    assert!(run.csv("cfi.csv").iter().all(|r| (f(&r[1]) - 4.0).abs() < 1e-9));
    let single = fockmetro(dir.path(), "cfi", "[cfi]\nalpha = 2.0\nphi_sweep = { start = 0.7, stop = 2.0, points = 1 }\n", &[]);
    assert_eq!(single.csv("cfi.csv").len(), 1);
}

#[test]
fn estimate_echoes_seed_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "seed = 5\n[estimate]\nalpha = 1.5\nr = 0.3\nphi_true = 1.0\nshots_per_trial = 20\ntrials = 30\nestimator = \"bayesian\"\ngrid_points = 181\n";
    let run = fockmetro(dir.path(), "estimate", cfg, &["--seed", "9"]);
    assert_eq!(run.code(), 0);
    let s = run.json("estimate_summary.json");
    assert_eq!(s["seed"], 9);
    assert!(s["posterior_variance_ratio"].as_f64().unwrap() > 0.0);
    assert_eq!(run.csv("estimates.csv").len(), 30);
    let bad = fockmetro(dir.path(), "estimate", &cfg.replace("trials = 30", "trials = 0"), &[]);
    assert_eq!(bad.code(), 1);
}

#[test]
fn entropy_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[entropy]\nalpha = 2.0\nnbar = [0.0, 1.0, 4.0]\ncoherent = [[0.3, 0.1], [1.0, 0.0]]\nsqueezed_r = [0.5]\n";
    let run = fockmetro(dir.path(), "entropy", cfg, &[]);
    assert_eq!(run.code(), 0);
    let cmp = run.csv("entropy_comparison.csv");
    assert!(f(&cmp[0][1]) < 1e-12 && f(&cmp[0][2]) < 1e-12);
    assert!(cmp[1..].iter().all(|r| r[3] == "number > squeezed"));
    let prod = run.csv("product_criterion.csv");
    assert!(prod.iter().filter(|r| r[0] == "coherent").all(|r| f(&r[3]) < 1e-9 && r[6] == "true"));
    assert!(prod.iter().filter(|r| r[0] == "squeezed").all(|r| f(&r[3]) > 0.01));
}

#[test]
fn missing_section_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let run = fockmetro(dir.path(), "cfi", "scenario = \"x\"\n", &[]);
    assert_eq!(run.code(), 1);
}
