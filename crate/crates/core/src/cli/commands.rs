use std::ffi::OsString;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use super::{
    ApproxArgs, BenchArgs, CompleteArgs, CompressArgs, ReportArgs, EXIT_NOT_CONVERGED, EXIT_OK,
};
use crate::completion::{svt_complete, ObservedEntries, SvtConfig};
use crate::decomposition::{
    approximation_error, captured_energy, energy_percentage, restarting_rsvd, rsvd_traced, BlockAudit,
    IterationView, R3svd, R3svdConfig,
};
use crate::error::{Error, Result};
use crate::io::{
    append_report, read_coordinate, read_dense, read_pgm, write_dense, write_pgm, IterationEntry, RunReport,
    SCHEMA_VERSION,
};
use crate::linalg::{frobenius_norm_sq, DenseMatrix, LowRankFactors};
use crate::synthetic::synthetic_matrix;

fn exit_for(converged: bool) -> i32 {
    if converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn emit(args: &ReportArgs, reports: &[RunReport]) -> Result<()> {
    if let Some(path) = &args.report {
        for r in reports {
            append_report(path, r)?;
        }
    }
    Ok(())
}

/// `‖A - X‖_F / ‖A‖_F`, zero for the zero matrix.
fn relative_error(a: &DenseMatrix, f: &LowRankFactors) -> Result<f64> {
    let fro = frobenius_norm_sq(a).sqrt();
    if fro == 0.0 {
        return Ok(0.0);
    }
    Ok(approximation_error(a, f)? / fro)
}

fn check_dims(f: &DenseMatrix, cfg: &R3svdConfig) -> Result<()> {
    cfg.validate(f.rows(), f.cols()).map(|_| ())
}

pub(super) fn approx(args: &ApproxArgs) -> Result<i32> {
    let cfg = args.decomp.config();
    cfg.validate_ranges()?;
    let a = read_dense(&args.input)?;
    check_dims(&a, &cfg)?;

    let (f, hist) = R3svd::new(cfg, args.decomp.seed).run(&a)?;
    write_dense(&f.u, with_suffix(&args.out_prefix, "_U.mtx"))?;
    let s = DenseMatrix::from_vec(f.rank(), 1, f.sigma.clone())?;
    write_dense(&s, with_suffix(&args.out_prefix, "_S.mtx"))?;
    write_dense(&f.v, with_suffix(&args.out_prefix, "_V.mtx"))?;

    let report = RunReport::from_history("r3svd", &cfg, args.decomp.seed, f.rank(), &hist, !args.report.no_timing)?
        .with_metric("actual_energy", captured_energy(&a, &f)?)
        .with_metric("relative_error", relative_error(&a, &f)?);
    emit(&args.report, std::slice::from_ref(&report))?;
    println!(
        "rank {} energy {:.6} converged {} ({:?})",
        f.rank(),
        hist.final_energy(),
        hist.converged,
        hist.stop_reason
    );
    Ok(exit_for(hist.converged))
}

fn quantized_psnr(original: &DenseMatrix, recon: &DenseMatrix) -> Option<f64> {
    let n = original.data().len();
    if n == 0 {
        return None;
    }
    let mse = original
        .data()
        .iter()
        .zip(recon.data())
        .map(|(&o, &r)| {
            let q = if r.is_nan() { 0.0 } else { r.clamp(0.0, 255.0).round() };
            (q - o) * (q - o)
        })
        .sum::<f64>()
        / n as f64;
    (mse > 0.0).then(|| 10.0 * (255.0 * 255.0 / mse).log10())
}

pub(super) fn compress(args: &CompressArgs) -> Result<i32> {
    let cfg = args.decomp.config();
    cfg.validate_ranges()?;
    if args.snapshot_every == Some(0) {
        return Err(Error::param("--snapshot-every must be at least 1"));
    }
    let img = read_pgm(&args.input)?;
    check_dims(&img, &cfg)?;

    let mut snapshots: Vec<(usize, usize, DenseMatrix)> = Vec::new();
    let every = args.snapshot_every;
    let mut observer = |view: &IterationView<'_>| {
        let Some(every) = every else { return };
        if !(view.iteration + 1).is_multiple_of(every) {
            return;
        }
        let u = view.u_prior.hcat(view.u_new).expect("same row count");
        let v = view.v_prior.hcat(view.v_new).expect("same row count");
        let sigma: Vec<f64> = view.sigma_prior.iter().chain(view.sigma_new).copied().collect();
        let f = LowRankFactors::new(u, sigma, v).expect("matching ranks");
        snapshots.push((view.iteration + 1, f.rank(), f.reconstruct()));
    };
    let (f, hist) = R3svd::new(cfg, args.decomp.seed).observe(&mut observer).run(&img)?;

    let recon = f.reconstruct();
    write_pgm(&recon, &args.out)?;
    let stem = args.out.with_extension("");
    for (iteration, rank, m) in &snapshots {
        let p = with_suffix(&stem, &format!("_iter{iteration:04}_rank{rank}.pgm"));
        write_pgm(m, p)?;
    }

    let mut report =
        RunReport::from_history("r3svd", &cfg, args.decomp.seed, f.rank(), &hist, !args.report.no_timing)?
            .with_metric("relative_error", relative_error(&img, &f)?);
    if let Some(psnr) = quantized_psnr(&img, &recon) {
        report = report.with_metric("psnr_db", psnr);
    }
    emit(&args.report, std::slice::from_ref(&report))?;
    println!(
        "rank {} energy {:.6} converged {} snapshots {}",
        f.rank(),
        hist.final_energy(),
        hist.converged,
        snapshots.len()
    );
    Ok(exit_for(hist.converged))
}

pub(super) fn complete(args: &CompleteArgs) -> Result<i32> {
    let read = read_coordinate(&args.input)?;
    let obs = match (args.rows, args.cols) {
        (None, None) => read,
        (r, c) => ObservedEntries::new(
            r.unwrap_or(read.rows()),
            c.unwrap_or(read.cols()),
            read.entries().to_vec(),
        )?,
    };
    if obs.is_empty() {
        return Err(Error::param(format!("{} holds no observed entries", args.input.display())));
    }
    let standard = SvtConfig::standard(&obs);
    let cfg = SvtConfig {
        threshold: args.threshold.unwrap_or(standard.threshold),
        step: args.step.unwrap_or(standard.step),
        rel_tol: args.rel_tol,
        max_iters: args.max_iters,
        inner: R3svdConfig {
            p: args.p,
            q: args.q,
            ..standard.inner
        },
    };
    cfg.validate()?;
    let truth = match &args.truth {
        Some(p) => {
            let m = read_dense(p)?;
            if m.shape() != (obs.rows(), obs.cols()) {
                return Err(Error::mismatch("truth", (obs.rows(), obs.cols()), m.shape()));
            }
            Some(m)
        }
        None => None,
    };

    let clock = std::time::Instant::now();
    let out = svt_complete(&obs, &cfg, args.seed)?;
    let wall_ms = clock.elapsed().as_secs_f64() * 1e3;
    write_dense(&out.x, &args.out)?;
    if let Some(p) = &args.out_pgm {
        write_pgm(&out.x, p)?;
    }

    let mut report = RunReport {
        schema_version: SCHEMA_VERSION,
        algorithm: "svt".into(),
        config: json!({
            "threshold": cfg.threshold,
            "step": cfg.step,
            "rel_tol": cfg.rel_tol,
            "max_iters": cfg.max_iters,
            "inner_p": cfg.inner.p,
            "inner_q": cfg.inner.q,
            "rows": obs.rows(),
            "cols": obs.cols(),
            "observed": obs.len(),
        }),
        seed: args.seed,
        rank: out.rank,
        converged: out.converged,
        stop_reason: None,
        energy: None,
        matmul_columns: out.matmul_columns,
        iterations: Vec::new(),
        wall_ms: (!args.report.no_timing).then_some(wall_ms),
        residual_history: out.residual_history.clone(),
        metrics: Default::default(),
    }
    .with_metric("final_residual", out.residual_history.last().copied().unwrap_or(0.0))
    .with_metric("warm_start", out.warm_start as f64);
    let mut recovery = None;
    if let Some(m) = &truth {
        let fro = frobenius_norm_sq(m).sqrt();
        let err = frobenius_norm_sq(&out.x.sub(m)?).sqrt();
        let rel = if fro > 0.0 { err / fro } else { err };
        recovery = Some(rel);
        report = report.with_metric("recovery_error", rel);
    }
    emit(&args.report, std::slice::from_ref(&report))?;
    print!(
        "rank {} iterations {} residual {:.3e} converged {}",
        out.rank,
        out.iterations,
        out.residual_history.last().copied().unwrap_or(0.0),
        out.converged
    );
    match recovery {
        Some(r) => println!(" recovery_error {r:.3e}"),
        None => println!(),
    }
    Ok(exit_for(out.converged && out.inner_converged))
}

struct BenchPlan {
    cfg: R3svdConfig,
    t0: usize,
    delta_t: usize,
    max_rank: usize,
    timing: bool,
}

pub(super) fn bench(args: &BenchArgs) -> Result<i32> {
    let base = args.decomp.config();
    base.validate_ranges()?;
    if args.seeds == 0 {
        return Err(Error::param("--seeds must be at least 1"));
    }
    let a = match (&args.input, args.synthetic) {
        (Some(p), _) => read_dense(p)?,
        (None, Some(spec)) => synthetic_matrix(args.rows, args.cols, spec, args.decomp.seed)?,
        (None, None) => return Err(Error::param("either --in or --synthetic is required")),
    };
    let small = a.rows().min(a.cols());
    if small == 0 {
        return Err(Error::param("matrix has no entries"));
    }
    // shrink the block to fit matrices smaller than the default block
    let t = base.t.min(small);
    let cfg = R3svdConfig {
        t,
        p: base.p.min(small - t),
        ..base
    };
    let max_rank = args.max_rank.unwrap_or(small).min(small);
    let plan = BenchPlan {
        cfg,
        t0: args.t0.unwrap_or(t).min(max_rank),
        delta_t: args.delta_t.unwrap_or(t),
        max_rank,
        timing: !args.report.no_timing,
    };
    if plan.t0 == 0 || plan.delta_t == 0 {
        return Err(Error::param("--t0, --delta-t and --max-rank must be at least 1"));
    }

    let runs: Vec<Vec<RunReport>> = (0..args.seeds as u64)
        .into_par_iter()
        .map(|k| bench_one(&a, &plan, args.decomp.seed.wrapping_add(k)))
        .collect::<Result<_>>()?;
    let reports: Vec<RunReport> = runs.into_iter().flatten().collect();
    emit(&args.report, &reports)?;
    print_summary(&reports);
    Ok(EXIT_OK)
}

fn bench_one(a: &DenseMatrix, plan: &BenchPlan, seed: u64) -> Result<Vec<RunReport>> {
    let small = a.rows().min(a.cols());
    let mut out = Vec::with_capacity(3);

    let (f, hist) = R3svd::new(plan.cfg, seed).run(a)?;
    let k = f.rank();
    out.push(
        RunReport::from_history("r3svd", &plan.cfg, seed, k, &hist, plan.timing)?
            .with_metric("relative_error", relative_error(a, &f)?),
    );

    let (rf, rhist) = restarting_rsvd(a, plan.t0, plan.delta_t, plan.cfg.p, plan.cfg.tau, plan.max_rank, seed)?;
    let rcfg = json!({
        "t0": plan.t0,
        "delta_t": plan.delta_t,
        "p": plan.cfg.p,
        "tau": plan.cfg.tau,
        "max_rank": plan.max_rank,
    });
    out.push(
        RunReport::from_history("restarting_rsvd", &rcfg, seed, rf.rank(), &rhist, plan.timing)?
            .with_metric("relative_error", relative_error(a, &rf)?),
    );

    if k > 0 {
        let p = plan.cfg.p.min(small - k);
        let run = rsvd_traced(a, k, p, plan.cfg.q, seed)?;
        let energy = energy_percentage(&run.factors.sigma, hist.fro_sq)?;
        let width = run.width;
        out.push(
            RunReport {
                schema_version: SCHEMA_VERSION,
                algorithm: "rsvd_fixed_rank".into(),
                config: json!({ "k": k, "p": p, "q": plan.cfg.q }),
                seed,
                rank: k,
                converged: true,
                stop_reason: None,
                energy: Some(energy),
                matmul_columns: run.matmul_columns,
                iterations: vec![IterationEntry {
                    iteration: 0,
                    sigma: run.factors.sigma.clone(),
                    energy,
                    matmul_columns: run.matmul_columns,
                    wall_ms: plan.timing.then_some(run.wall_ms),
                    audit: BlockAudit {
                        sample_cols: width,
                        sketch_cols: width,
                        basis_cols: width,
                        block_rows: width,
                        min_width: width,
                        max_width: width,
                    },
                }],
                wall_ms: plan.timing.then_some(run.wall_ms),
                residual_history: Vec::new(),
                metrics: Default::default(),
            }
            .with_metric("relative_error", relative_error(a, &run.factors)?),
        );
    }
    Ok(out)
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn print_summary(reports: &[RunReport]) {
    println!(
        "{:<18} {:>5} {:>5} {:>10} {:>12} {:>12} {:>12}",
        "method", "runs", "conv", "rank", "matmul_cols", "energy", "rel_error"
    );
    for method in ["r3svd", "restarting_rsvd", "rsvd_fixed_rank"] {
        let rs: Vec<&RunReport> = reports.iter().filter(|r| r.algorithm == method).collect();
        if rs.is_empty() {
            continue;
        }
        println!(
            "{:<18} {:>5} {:>5} {:>10.1} {:>12.1} {:>12.6} {:>12.3e}",
            method,
            rs.len(),
            rs.iter().filter(|r| r.converged).count(),
            median(rs.iter().map(|r| r.rank as f64).collect()),
            median(rs.iter().map(|r| r.matmul_columns as f64).collect()),
            median(rs.iter().filter_map(|r| r.energy).collect()),
            median(rs.iter().filter_map(|r| r.metrics.get("relative_error").copied()).collect()),
        );
    }
}
