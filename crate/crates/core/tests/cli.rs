use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use r3svd::completion::ObservedEntries;
use r3svd::io::{read_dense, read_pgm, read_reports, write_coordinate, write_dense, write_pgm, RunReport};
use r3svd::linalg::{matmul, DenseMatrix};
use r3svd::sampling::gaussian_matrix;
use r3svd::synthetic::{synthetic_matrix, SpectrumSpec};
use tempfile::TempDir;

fn r3svd_cmd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_r3svd"))
        .args(args)
        .env_remove("R3SVD_SEED")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("terminated by signal")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn one_report(p: &Path) -> RunReport {
    let mut r = read_reports(p).unwrap();
    assert_eq!(r.len(), 1);
    r.pop().unwrap()
}

fn gap_file(dir: &TempDir) -> PathBuf {
    let a = synthetic_matrix(120, 90, SpectrumSpec::Gap { rank: 20 }, 4).unwrap();
    let p = dir.path().join("gap.mtx");
    write_dense(&a, &p).unwrap();
    p
}

fn test_image(h: usize, w: usize) -> DenseMatrix {
    DenseMatrix::from_fn(h, w, |i, j| {
        let (x, y) = (i as f64 / h as f64, j as f64 / w as f64);
        let v = 128.0 + 60.0 * (6.0 * x).sin() * (4.0 * y).cos() + 30.0 * (17.0 * x * y).sin()
            + 20.0 * ((i / 8 + j / 8) % 2) as f64;
        v.round()
    })
}

#[test]
fn approx_finds_the_gap_rank() {
    let dir = tempfile::tempdir().unwrap();
    let input = gap_file(&dir);
    let prefix = dir.path().join("f");
    let rep = dir.path().join("r.jsonl");
    let o = r3svd_cmd(&["approx", "--in", s(&input), "--out-prefix", s(&prefix), "--tau", "0.999", "--t", "5",
        "--report", s(&rep)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = one_report(&rep);
    assert!((20..=25).contains(&r.rank), "rank {}", r.rank);
    assert!(r.converged);
    let u = read_dense(dir.path().join("f_U.mtx")).unwrap();
    let sv = read_dense(dir.path().join("f_S.mtx")).unwrap();
    let v = read_dense(dir.path().join("f_V.mtx")).unwrap();
    assert_eq!(u.shape(), (120, r.rank));
    assert_eq!(v.shape(), (90, r.rank));
    assert_eq!(sv.rows() * sv.cols(), r.rank);
    assert!(r.metrics["relative_error"] < 0.04);
}

#[test]
fn approx_zero_matrix_has_rank_zero() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("z.mtx");
    write_dense(&DenseMatrix::zeros(8, 6), &input).unwrap();
    let rep = dir.path().join("r.jsonl");
    let o = r3svd_cmd(&["approx", "--in", s(&input), "--out-prefix", s(&dir.path().join("z")), "--t", "2",
        "--p", "1", "--report", s(&rep)]);
    assert_eq!(code(&o), 0);
    assert_eq!(one_report(&rep).rank, 0);
}

#[test]
fn approx_rejects_bad_parameters_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let input = gap_file(&dir);
    let prefix = dir.path().join("bad");
    for extra in [&["--tau", "1.5"][..], &["--t", "80", "--p", "20"], &["--tau", "0"]] {
        let mut args = vec!["approx", "--in", s(&input), "--out-prefix", s(&prefix)];
        args.extend_from_slice(extra);
        assert_eq!(code(&r3svd_cmd(&args)), 1, "{extra:?}");
    }
    assert!(!dir.path().join("bad_U.mtx").exists());
    let o = r3svd_cmd(&["approx", "--in", s(&dir.path().join("missing.mtx")), "--out-prefix", s(&prefix)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn approx_iteration_cap_exits_two_with_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = gap_file(&dir);
    let prefix = dir.path().join("cap");
    let o = r3svd_cmd(&["approx", "--in", s(&input), "--out-prefix", s(&prefix), "--t", "3", "--maxit", "1"]);
    assert_eq!(code(&o), 2);
    assert_eq!(read_dense(dir.path().join("cap_U.mtx")).unwrap().shape(), (120, 3));
}

#[test]
fn compress_constant_image_is_rank_one_and_exact() {
    let dir = tempfile::tempdir().unwrap();
    let img = DenseMatrix::from_fn(32, 40, |_, _| 77.0);
    let input = dir.path().join("c.pgm");
    write_pgm(&img, &input).unwrap();
    let out = dir.path().join("o.pgm");
    let rep = dir.path().join("r.jsonl");
    let o = r3svd_cmd(&["compress", "--in", s(&input), "--out", s(&out), "--t", "4", "--report", s(&rep)]);
    assert_eq!(code(&o), 0);
    assert_eq!(one_report(&rep).rank, 1);
    assert_eq!(read_pgm(&out).unwrap(), img);
}

#[test]
fn compress_near_full_energy_is_high_fidelity_with_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("i.pgm");
    write_pgm(&test_image(64, 80), &input).unwrap();
    let out = dir.path().join("o.pgm");
    let rep = dir.path().join("r.jsonl");
    let o = r3svd_cmd(&["compress", "--in", s(&input), "--out", s(&out), "--tau", "0.999999", "--t", "8",
        "--snapshot-every", "1", "--report", s(&rep)]);
    assert_eq!(code(&o), 0);
    let r = one_report(&rep);
    assert!(r.metrics["psnr_db"] >= 50.0, "{:?}", r.metrics);
    let snaps = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("o_iter"))
        .count();
    assert_eq!(snaps, r.iterations.len());
    assert!(dir.path().join(format!("o_iter0001_rank{}.pgm", r.iterations[0].sigma.len())).exists());
}

#[test]
fn compress_rank_is_stable_across_block_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("i.pgm");
    write_pgm(&test_image(96, 96), &input).unwrap();
    let mut ranks = Vec::new();
    for t in ["20", "15", "10", "5"] {
        let rep = dir.path().join(format!("r{t}.jsonl"));
        let o = r3svd_cmd(&["compress", "--in", s(&input), "--out", s(&dir.path().join("o.pgm")), "--tau", "0.99",
            "--t", t, "--p", "5", "--report", s(&rep)]);
        assert_eq!(code(&o), 0);
        let r = one_report(&rep);
        let width: usize = t.parse::<usize>().unwrap() + 5;
        assert!(r.iterations.iter().all(|it| it.audit.max_width <= width));
        ranks.push(r.rank);
    }
    let (lo, hi) = (ranks.iter().min().unwrap(), ranks.iter().max().unwrap());
    assert!(hi - lo <= 3, "{ranks:?}");
}

fn low_rank(m: usize, n: usize, r: usize, seed: u64) -> DenseMatrix {
    matmul(&gaussian_matrix(m, r, seed).matrix, &gaussian_matrix(n, r, seed + 1).matrix, false, true).unwrap()
}

#[test]
fn complete_recovers_low_rank_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let m = low_rank(150, 150, 5, 21);
    let truth = dir.path().join("truth.mtx");
    write_dense(&m, &truth).unwrap();
    let obs = ObservedEntries::sample(&m, 0.3, 8).unwrap();
    let input = dir.path().join("obs.mtx");
    write_coordinate(&obs, &input).unwrap();
    let out = dir.path().join("x.mtx");
    let pgm = dir.path().join("x.pgm");
    let rep = dir.path().join("r.jsonl");
    let o = r3svd_cmd(&["complete", "--in", s(&input), "--out", s(&out), "--out-pgm", s(&pgm), "--truth",
        s(&truth), "--report", s(&rep)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = one_report(&rep);
    assert!(r.metrics["recovery_error"] <= 1e-3, "{:?}", r.metrics);
    assert_eq!(r.rank, 5);
    assert_eq!(read_dense(&out).unwrap().shape(), (150, 150));
    assert_eq!(read_pgm(&pgm).unwrap().shape(), (150, 150));
}

#[test]
fn complete_fully_observed_is_quick() {
    let dir = tempfile::tempdir().unwrap();
    let m = low_rank(30, 25, 3, 2);
    let input = dir.path().join("obs.mtx");
    write_coordinate(&ObservedEntries::full(&m), &input).unwrap();
    let rep = dir.path().join("r.jsonl");
    let o = r3svd_cmd(&["complete", "--in", s(&input), "--out", s(&dir.path().join("x.mtx")), "--threshold", "0",
        "--step", "1", "--report", s(&rep)]);
    assert_eq!(code(&o), 0);
    assert!(one_report(&rep).residual_history.len() <= 5);
}

#[test]
fn complete_failure_codes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.mtx");
    write_coordinate(&ObservedEntries::new(5, 5, vec![]).unwrap(), &empty).unwrap();
    let out = dir.path().join("x.mtx");
    assert_eq!(code(&r3svd_cmd(&["complete", "--in", s(&empty), "--out", s(&out)])), 1);

    let m = low_rank(30, 30, 2, 3);
    let input = dir.path().join("obs.mtx");
    write_coordinate(&ObservedEntries::sample(&m, 0.5, 1).unwrap(), &input).unwrap();
    let o = r3svd_cmd(&["complete", "--in", s(&input), "--out", s(&out), "--step", "50", "--threshold", "1"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

fn medians(reports: &[RunReport], algorithm: &str) -> f64 {
    let mut xs: Vec<f64> = reports
        .iter()
        .filter(|r| r.algorithm == algorithm)
        .map(|r| r.matmul_columns as f64)
        .collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    (xs[(n - 1) / 2] + xs[n / 2]) / 2.0
}

#[test]
fn bench_incremental_beats_restarting_on_gap_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("r.jsonl");
    let o = r3svd_cmd(&["bench", "--synthetic", "gap:20", "--seeds", "20", "--t", "5", "--p", "5", "--tau", "0.999",
        "--no-timing", "--report", s(&rep)]);
    assert_eq!(code(&o), 0);
    let reports = read_reports(&rep).unwrap();
    assert_eq!(reports.len(), 60);
    let (inc, rst) = (medians(&reports, "r3svd"), medians(&reports, "restarting_rsvd"));
    assert!(inc <= rst, "{inc} vs {rst}");
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("restarting_rsvd") && stdout.contains("rsvd_fixed_rank"));
}

#[test]
fn bench_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for p in [&a, &b] {
        let o = r3svd_cmd(&["bench", "--synthetic", "exp:0.3", "--rows", "60", "--cols", "40", "--seeds", "3",
            "--seed", "17", "--t", "4", "--no-timing", "--report", s(p)]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn bench_edge_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("r.jsonl");
    let o = r3svd_cmd(&["bench", "--synthetic", "gap:1", "--rows", "1", "--cols", "1", "--report", s(&rep)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(read_reports(&rep).unwrap().iter().all(|r| r.rank == 1));
    assert_eq!(code(&r3svd_cmd(&["bench", "--synthetic", "cubic:2"])), 1);
    assert_eq!(code(&r3svd_cmd(&["bench"])), 1);
    assert_eq!(code(&r3svd_cmd(&["--help"])), 0);
}

#[test]
fn seed_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |env: Option<&str>, flag: Option<&str>, name: &str| {
        let p = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_r3svd"));
        cmd.args(["bench", "--synthetic", "poly:1", "--rows", "30", "--cols", "20", "--t", "3", "--no-timing"])
            .args(["--report", s(&p)])
            .env_remove("R3SVD_SEED");
        if let Some(e) = env {
            cmd.env("R3SVD_SEED", e);
        }
        if let Some(f) = flag {
            cmd.args(["--seed", f]);
        }
        assert!(cmd.status().unwrap().success());
        read_reports(&p).unwrap()
    };
    let from_env = run(Some("99"), None, "e.jsonl");
    assert!(from_env.iter().all(|r| r.seed == 99));
    assert_eq!(from_env, run(None, Some("99"), "f.jsonl"));
    assert!(run(None, None, "d.jsonl").iter().all(|r| r.seed == 0));
}
