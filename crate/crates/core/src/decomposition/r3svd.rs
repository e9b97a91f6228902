//! Incremental rank-revealing randomized SVD.
//!
//! Each iteration samples the part of the row space not yet covered by the
//! accumulated right factor, factors the resulting `(t + p)`-wide block and
//! appends its leading `t` triplets. The new right block is re-orthogonalized
//! against the accumulated one; the new left block is orthogonal to the old
//! one because the sample was. The estimated energy (sum of squared appended
//! singular values) is checked after every appended value and equals the
//! energy of `U_L U_L^T A` exactly in exact arithmetic.
//!
//! With `q > 0` each block goes through `q` power rounds on
//! `(A (I - P_V) A^T)^q A G`, projecting the right-side iterate away from
//! `V_L` and the left-side iterate away from `U_L`.

use std::time::Instant;

use super::config::{R3svdConfig, SampleRefresh};
use super::history::{ApproximationHistory, BlockAudit, IterationRecord, IterationWorkspace, StopReason};
use super::Counted;
use crate::error::{Error, Result};
use crate::linalg::{
    block_svd, matmul, orthonormal_basis, CompensatedSum, DenseMatrix, LinearOperator, LowRankFactors,
};
use crate::sampling::{derive_seed, gaussian_matrix, project_out, update_gaussian_block, GaussianBlock};

/// Block columns whose residual norm is at most this fraction of `‖A‖_F`
/// are treated as numerically zero and dropped.
pub const DROP_RELATIVE: f64 = 1e-13;

/// Orthogonalized right vectors with a residual below this norm duplicate a
/// direction already in `V_L` and are dropped with their triplet.
const V_DROP: f64 = 1e-8;

/// Which sampling code path to run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PowerRoute {
    /// Plain sampling for `q = 0`, power sampling otherwise.
    #[default]
    Auto,
    /// Always the plain path; `q` is ignored.
    Plain,
    /// Always the power path, even for `q = 0`.
    Power,
}

/// State exposed to an observer after each iteration, before the new block
/// is appended.
pub struct IterationView<'a> {
    pub iteration: usize,
    pub u_prior: &'a DenseMatrix,
    pub v_prior: &'a DenseMatrix,
    pub sigma_prior: &'a [f64],
    pub u_new: &'a DenseMatrix,
    pub v_new: &'a DenseMatrix,
    pub sigma_new: &'a [f64],
    /// The sampling block for the next iteration, if there is one.
    pub next_sample: Option<&'a GaussianBlock>,
    pub audit: BlockAudit,
}

/// Configurable runner; [`r3svd`] covers the common case.
pub struct R3svd<'o> {
    cfg: R3svdConfig,
    seed: u64,
    route: PowerRoute,
    sigma_floor: Option<f64>,
    observer: Option<&'o mut dyn FnMut(&IterationView<'_>)>,
}

/// Runs the decomposition with energy-threshold stopping.
pub fn r3svd(
    a: &DenseMatrix,
    cfg: &R3svdConfig,
    seed: u64,
) -> Result<(LowRankFactors, ApproximationHistory)> {
    R3svd::new(*cfg, seed).run(a)
}

impl<'o> R3svd<'o> {
    pub fn new(cfg: R3svdConfig, seed: u64) -> Self {
        R3svd {
            cfg,
            seed,
            route: PowerRoute::Auto,
            sigma_floor: None,
            observer: None,
        }
    }

    pub fn route(mut self, route: PowerRoute) -> Self {
        self.route = route;
        self
    }

    /// Additionally stop after the first iteration whose smallest appended
    /// singular value is below `floor`.
    pub fn sigma_floor(mut self, floor: f64) -> Self {
        self.sigma_floor = Some(floor);
        self
    }

    pub fn observe(mut self, f: &'o mut dyn FnMut(&IterationView<'_>)) -> Self {
        self.observer = Some(f);
        self
    }

    pub fn run<A: LinearOperator + ?Sized>(
        mut self,
        a: &A,
    ) -> Result<(LowRankFactors, ApproximationHistory)> {
        let (m, n) = (a.nrows(), a.ncols());
        let maxit = self.cfg.validate(m, n)?;
        if let Some(f) = self.sigma_floor {
            if !(f >= 0.0) {
                return Err(Error::param(format!("sigma floor must be non-negative, got {f}")));
            }
        }
        let clock = Instant::now();
        let fro_sq = a.frobenius_norm_sq();
        let mut hist = ApproximationHistory::new(fro_sq);
        if fro_sq == 0.0 {
            hist.finish(StopReason::ZeroMatrix, 0, elapsed_ms(clock));
            return Ok((LowRankFactors::empty(m, n), hist));
        }
        if !fro_sq.is_finite() {
            return Err(Error::param("matrix norm is not finite"));
        }

        let op = Counted::new(a);
        let t = self.cfg.t;
        let width = t + self.cfg.p;
        let drop_tol = DROP_RELATIVE * fro_sq.sqrt();
        let use_power = match self.route {
            PowerRoute::Auto => self.cfg.q > 0,
            PowerRoute::Plain => false,
            PowerRoute::Power => true,
        };

        let mut u_l = DenseMatrix::zeros(m, 0);
        let mut v_l = DenseMatrix::zeros(n, 0);
        let mut sigma_l: Vec<f64> = Vec::new();
        let mut block_ends: Vec<usize> = Vec::new();
        let mut energy = CompensatedSum::new();
        let mut sample = gaussian_matrix(n, width, self.seed);
        let mut reason = StopReason::IterationLimit;

        for i in 0..maxit {
            let it_clock = Instant::now();
            let cols_before = op.columns();
            let mut ws = IterationWorkspace::new(sample.matrix.cols());

            let y = op.apply(&sample.matrix)?;
            let (mut basis, _) = orthonormal_basis(&y, drop_tol);
            ws.set_y(y);
            if use_power {
                basis = power_rounds(&op, basis, &u_l, &v_l, self.cfg.q, drop_tol, &mut ws)?;
            }
            if basis.cols() == 0 {
                ws.set_q(basis);
                reason = StopReason::Exhausted;
                hist.iterations.push(IterationRecord {
                    iteration: i,
                    sigma: Vec::new(),
                    energy: energy.value() / fro_sq,
                    matmul_columns: op.columns() - cols_before,
                    wall_ms: elapsed_ms(it_clock),
                    audit: ws.audit(),
                });
                break;
            }

            let b = op.apply_transpose(&basis)?.transpose();
            let (ub, sb, vb) = block_svd(&b)?;
            ws.set_b(b);
            let take = t.min(sb.len());
            let u_blk = matmul(&basis, &ub.leading_columns(take), false, false)?;
            ws.set_q(basis);

            // orthogonalization against the accumulated right factor
            let z = project_out(&v_l, &vb.leading_columns(take))?;
            let (mut v_new, kept) = orthonormal_basis(&z, V_DROP);
            let mut u_new = u_blk.select_columns(&kept);
            let mut sig_new: Vec<f64> = kept.iter().map(|&j| sb[j]).collect();

            let mut stop_here = false;
            for (j, &s) in sig_new.iter().enumerate() {
                energy.add(s * s);
                let phi = energy.value() / fro_sq;
                hist.energy.push(phi);
                if phi >= self.cfg.tau {
                    reason = StopReason::EnergyThreshold;
                    stop_here = true;
                    let keep = j + 1;
                    if keep < sig_new.len() {
                        u_new = u_new.leading_columns(keep);
                        v_new = v_new.leading_columns(keep);
                    }
                    break;
                }
            }
            if stop_here {
                sig_new.truncate(u_new.cols());
            } else if sig_new.is_empty() {
                reason = StopReason::Exhausted;
                stop_here = true;
            } else if let Some(floor) = self.sigma_floor {
                if sig_new.last().is_some_and(|&s| s < floor) {
                    reason = StopReason::SigmaFloor;
                    stop_here = true;
                }
            }

            let next = if stop_here || i + 1 == maxit {
                None
            } else {
                Some(self.next_sample(&sample, &v_l, &block_ends, &v_new, n, width, i + 1)?)
            };
            if let Some(g) = &next {
                ws.note(g.matrix.cols());
            }
            let audit = ws.audit();
            if let Some(obs) = self.observer.as_mut() {
                obs(&IterationView {
                    iteration: i,
                    u_prior: &u_l,
                    v_prior: &v_l,
                    sigma_prior: &sigma_l,
                    u_new: &u_new,
                    v_new: &v_new,
                    sigma_new: &sig_new,
                    next_sample: next.as_ref(),
                    audit,
                });
            }

            u_l = u_l.hcat(&u_new)?;
            v_l = v_l.hcat(&v_new)?;
            if !sig_new.is_empty() {
                block_ends.push(v_l.cols());
            }
            hist.iterations.push(IterationRecord {
                iteration: i,
                sigma: sig_new.clone(),
                energy: energy.value() / fro_sq,
                matmul_columns: op.columns() - cols_before,
                wall_ms: elapsed_ms(it_clock),
                audit,
            });
            sigma_l.extend(sig_new);

            if stop_here {
                break;
            }
            if let Some(g) = next {
                sample = g;
            }
        }

        let mut factors = LowRankFactors::new(u_l, sigma_l, v_l)?;
        factors.sort_descending();
        hist.finish(reason, op.columns(), elapsed_ms(clock));
        Ok((factors, hist))
    }

    /// Sampling block for `iteration`, orthogonal to `[v_l, v_new]`.
    #[allow(clippy::too_many_arguments)]
    fn next_sample(
        &self,
        current: &GaussianBlock,
        v_l: &DenseMatrix,
        block_ends: &[usize],
        v_new: &DenseMatrix,
        n: usize,
        width: usize,
        iteration: usize,
    ) -> Result<GaussianBlock> {
        match self.cfg.refresh {
            SampleRefresh::Recycled => update_gaussian_block(current, v_new),
            SampleRefresh::Fresh => {
                let mut g = gaussian_matrix(n, width, derive_seed(self.seed, iteration as u64));
                let mut start = 0;
                for &end in block_ends {
                    let idx: Vec<usize> = (start..end).collect();
                    g = update_gaussian_block(&g, &v_l.select_columns(&idx))?;
                    start = end;
                }
                update_gaussian_block(&g, v_new)
            }
        }
    }
}

fn power_rounds<A: LinearOperator + ?Sized>(
    op: &Counted<'_, A>,
    mut basis: DenseMatrix,
    u_l: &DenseMatrix,
    v_l: &DenseMatrix,
    q: usize,
    drop_tol: f64,
    ws: &mut IterationWorkspace,
) -> Result<DenseMatrix> {
    for _ in 0..q {
        if basis.cols() == 0 {
            break;
        }
        let z = project_out(v_l, &op.apply_transpose(&basis)?)?;
        ws.note(z.cols());
        let (qz, _) = orthonormal_basis(&z, drop_tol);
        ws.note(qz.cols());
        if qz.cols() == 0 {
            return Ok(DenseMatrix::zeros(op.nrows(), 0));
        }
        let y = project_out(u_l, &op.apply(&qz)?)?;
        ws.note(y.cols());
        basis = orthonormal_basis(&y, drop_tol).0;
        ws.note(basis.cols());
    }
    Ok(basis)
}

fn elapsed_ms(clock: Instant) -> f64 {
    clock.elapsed().as_secs_f64() * 1e3
}
