use std::time::Instant;

use super::energy::energy_percentage;
use super::history::{ApproximationHistory, BlockAudit, IterationRecord, StopReason};
use super::rsvd::rsvd_traced;
use crate::error::{Error, Result};
use crate::linalg::{LinearOperator, LowRankFactors};
use crate::sampling::derive_seed;

/// Baseline that reruns fixed-rank RSVD from scratch at ranks
/// `t0, t0 + delta_t, ...` until the energy threshold is met or the rank
/// would exceed `max_rank`. Nothing is reused between trials.
///
/// The last trial is clamped to `max_rank` (itself capped at `min(m, n)`)
/// so the cap is always tried once. Each trial's oversampling shrinks if
/// `k + p` would exceed `min(m, n)`.
pub fn restarting_rsvd<A: LinearOperator + ?Sized>(
    a: &A,
    t0: usize,
    delta_t: usize,
    p: usize,
    tau: f64,
    max_rank: usize,
    seed: u64,
) -> Result<(LowRankFactors, ApproximationHistory)> {
    let (m, n) = (a.nrows(), a.ncols());
    let small = m.min(n);
    if t0 == 0 || delta_t == 0 {
        return Err(Error::param("t0 and delta_t must be at least 1"));
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::param(format!("tau must lie in (0, 1], got {tau}")));
    }
    let cap = max_rank.min(small);
    if t0 > cap {
        return Err(Error::param(format!(
            "t0 = {t0} exceeds the rank cap {cap}"
        )));
    }
    let clock = Instant::now();
    let fro_sq = a.frobenius_norm_sq();
    let mut hist = ApproximationHistory::new(fro_sq);
    if fro_sq == 0.0 {
        hist.finish(StopReason::ZeroMatrix, 0, 0.0);
        return Ok((LowRankFactors::empty(m, n), hist));
    }

    let mut k = t0;
    let mut total_cols = 0;
    let mut best = LowRankFactors::empty(m, n);
    let mut reason = StopReason::IterationLimit;
    for trial in 0.. {
        let pk = p.min(small - k);
        let run = rsvd_traced(a, k, pk, 0, derive_seed(seed, trial as u64))?;
        let phi = energy_percentage(&run.factors.sigma, fro_sq)?;
        total_cols += run.matmul_columns;
        hist.energy.push(phi);
        hist.iterations.push(IterationRecord {
            iteration: trial,
            sigma: run.factors.sigma.clone(),
            energy: phi,
            matmul_columns: run.matmul_columns,
            wall_ms: run.wall_ms,
            audit: BlockAudit {
                sample_cols: run.width,
                sketch_cols: run.width,
                basis_cols: run.width,
                block_rows: run.width,
                min_width: run.width,
                max_width: run.width,
            },
        });
        best = run.factors;
        if phi >= tau {
            reason = StopReason::EnergyThreshold;
            break;
        }
        if k == cap {
            break;
        }
        k = (k + delta_t).min(cap);
    }
    hist.finish(reason, total_cols, clock.elapsed().as_secs_f64() * 1e3);
    Ok((best, hist))
}
