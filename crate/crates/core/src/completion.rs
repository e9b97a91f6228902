//! Matrix completion by singular value thresholding, with the incremental
//! randomized SVD as the dominant-triplet engine.
//!
//! The iterate `Y` is supported on the observed set only, so it is kept as
//! one value per observed entry and multiplied in sparse form.

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::decomposition::{R3svd, R3svdConfig, StopReason};
use crate::error::{Error, Result};
use crate::linalg::{CompensatedSum, DenseMatrix, LinearOperator, LowRankFactors};
use crate::sampling::derive_seed;

/// Known entries of an `rows x cols` matrix, stored in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservedEntries {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
    row_ptr: Vec<usize>,
}

impl ObservedEntries {
    /// Validates indices, uniqueness and finiteness, then sorts.
    pub fn new(rows: usize, cols: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for &(i, j, v) in &entries {
            if i >= rows || j >= cols {
                return Err(Error::param(format!(
                    "entry ({i}, {j}) outside a {rows}x{cols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
            if !seen.insert((i, j)) {
                return Err(Error::param(format!("entry ({i}, {j}) given twice")));
            }
        }
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; rows + 1];
        for &(i, _, _) in &entries {
            row_ptr[i + 1] += 1;
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(ObservedEntries {
            rows,
            cols,
            entries,
            row_ptr,
        })
    }

    /// Every entry of `m`.
    pub fn full(m: &DenseMatrix) -> Self {
        let entries = (0..m.rows())
            .flat_map(|i| (0..m.cols()).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, m.get(i, j)))
            .collect();
        Self::new(m.rows(), m.cols(), entries).expect("dense entries are unique")
    }

    /// `round(fraction * rows * cols)` entries of `m` chosen uniformly
    /// without replacement.
    pub fn sample(m: &DenseMatrix, fraction: f64, seed: u64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::param(format!("fraction must lie in (0, 1], got {fraction}")));
        }
        let total = m.rows() * m.cols();
        let count = ((fraction * total as f64).round() as usize).min(total);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let entries = sample(&mut rng, total, count)
            .into_iter()
            .map(|flat| {
                let (i, j) = (flat / m.cols(), flat % m.cols());
                (i, j, m.get(i, j))
            })
            .collect();
        Self::new(m.rows(), m.cols(), entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.2).collect()
    }

    pub fn sample_fraction(&self) -> f64 {
        self.entries.len() as f64 / (self.rows * self.cols) as f64
    }

    /// Values of `x` on the observed set, in storage order.
    pub fn gather(&self, x: &DenseMatrix) -> Result<Vec<f64>> {
        if x.shape() != (self.rows, self.cols) {
            return Err(Error::mismatch("gather", (self.rows, self.cols), x.shape()));
        }
        Ok(self.entries.iter().map(|&(i, j, _)| x.get(i, j)).collect())
    }

    /// Dense matrix holding `values` on the observed set and zero elsewhere.
    pub fn scatter(&self, values: &[f64]) -> Result<DenseMatrix> {
        self.check_len(values.len())?;
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for (&(i, j, _), &v) in self.entries.iter().zip(values) {
            out.set(i, j, v);
        }
        Ok(out)
    }

    /// `P_Omega(x)` as a dense matrix.
    pub fn mask(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.scatter(&self.gather(x)?)
    }

    /// Sparse operator with these positions and the given values.
    pub fn with_values<'a>(&'a self, values: &'a [f64]) -> Result<SparseView<'a>> {
        self.check_len(values.len())?;
        Ok(SparseView { obs: self, values })
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.entries.len() {
            return Err(Error::param(format!(
                "expected {} values, got {len}",
                self.entries.len()
            )));
        }
        Ok(())
    }
}

/// A matrix supported on an observed set.
#[derive(Clone, Copy, Debug)]
pub struct SparseView<'a> {
    obs: &'a ObservedEntries,
    values: &'a [f64],
}

impl SparseView<'_> {
    pub fn to_dense(&self) -> DenseMatrix {
        self.obs.scatter(self.values).expect("length checked on construction")
    }
}

impl LinearOperator for SparseView<'_> {
    fn nrows(&self) -> usize {
        self.obs.rows
    }

    fn ncols(&self) -> usize {
        self.obs.cols
    }

    fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.rows() != self.obs.cols {
            return Err(Error::mismatch("sparse apply", (self.obs.rows, self.obs.cols), x.shape()));
        }
        let c = x.cols();
        let mut out = DenseMatrix::zeros(self.obs.rows, c);
        if c == 0 {
            return Ok(out);
        }
        out.data_mut().par_chunks_mut(c).enumerate().for_each(|(i, row)| {
            for k in self.obs.row_ptr[i]..self.obs.row_ptr[i + 1] {
                let (_, j, _) = self.obs.entries[k];
                let v = self.values[k];
                for (o, xv) in row.iter_mut().zip(x.row(j)) {
                    *o += v * xv;
                }
            }
        });
        Ok(out)
    }

    fn apply_transpose(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.rows() != self.obs.rows {
            return Err(Error::mismatch(
                "sparse apply_transpose",
                (self.obs.cols, self.obs.rows),
                x.shape(),
            ));
        }
        let mut out = DenseMatrix::zeros(self.obs.cols, x.cols());
        for (&(i, j, _), &v) in self.obs.entries.iter().zip(self.values) {
            for (o, xv) in out.row_mut(j).iter_mut().zip(x.row(i)) {
                *o += v * xv;
            }
        }
        Ok(out)
    }

    fn frobenius_norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).collect::<CompensatedSum>().value()
    }
}

/// Elementwise `max(sigma - threshold, 0)`.
pub fn shrink_singular_values(sigma: &[f64], threshold: f64) -> Vec<f64> {
    sigma.iter().map(|&s| (s - threshold).max(0.0)).collect()
}

/// Produces the singular triplets of an iterate that lie above a threshold.
pub trait DominantSvd {
    /// Triplets of `y` with `sigma > threshold`, sorted descending.
    /// `rank_hint` is the count returned on the previous step.
    fn above_threshold(
        &mut self,
        y: &SparseView<'_>,
        threshold: f64,
        rank_hint: usize,
        seed: u64,
    ) -> Result<LowRankFactors>;
}

/// The incremental randomized SVD, run without an energy target and stopped
/// once an appended singular value drops below the threshold.
#[derive(Clone, Copy, Debug)]
pub struct R3svdSolver {
    /// Supplies `p`, `q` and the sampling refresh; `t` and `tau` are
    /// overridden per call.
    pub template: R3svdConfig,
    /// Set when any call stopped on its iteration cap.
    pub hit_iteration_limit: bool,
    /// Columns multiplied by the iterate over all calls.
    pub matmul_columns: usize,
}

impl R3svdSolver {
    pub fn new(template: R3svdConfig) -> Self {
        R3svdSolver {
            template,
            hit_iteration_limit: false,
            matmul_columns: 0,
        }
    }
}

impl DominantSvd for R3svdSolver {
    fn above_threshold(
        &mut self,
        y: &SparseView<'_>,
        threshold: f64,
        rank_hint: usize,
        seed: u64,
    ) -> Result<LowRankFactors> {
        let small = y.nrows().min(y.ncols());
        let t = (rank_hint + 5).min(small);
        let cfg = R3svdConfig {
            t,
            p: self.template.p.min(small - t),
            maxit: None,
            tau: 1.0,
            ..self.template
        };
        let (mut f, hist) = R3svd::new(cfg, seed).sigma_floor(threshold).run(y)?;
        self.matmul_columns += hist.matmul_columns;
        if hist.stop_reason == StopReason::IterationLimit {
            self.hit_iteration_limit = true;
        }
        let keep = f.sigma.iter().take_while(|&&s| s > threshold).count();
        f.truncate(keep);
        Ok(f)
    }
}

/// Parameters of the thresholding iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvtConfig {
    pub threshold: f64,
    pub step: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub inner: R3svdConfig,
}

/// Relative residual above which the iteration is declared divergent.
/// The residual of the zero initial estimate is 1.
pub const DIVERGENCE_LIMIT: f64 = 10.0;

impl SvtConfig {
    /// `threshold = 5 sqrt(m n)`, `step = 1.2 / fraction`, `rel_tol = 1e-4`,
    /// at most 1000 iterations; the inner solver uses `p = 10, q = 15`.
    pub fn standard(obs: &ObservedEntries) -> Self {
        let frac = obs.sample_fraction();
        SvtConfig {
            threshold: 5.0 * ((obs.rows() * obs.cols()) as f64).sqrt(),
            step: if frac > 0.0 { 1.2 / frac } else { 1.2 },
            max_iters: 1000,
            rel_tol: 1e-4,
            inner: R3svdConfig::new(5, 10, 15, 1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold >= 0.0 && self.threshold.is_finite()) {
            return Err(Error::param(format!("threshold must be non-negative, got {}", self.threshold)));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::param(format!("step must be positive, got {}", self.step)));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters must be at least 1"));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::param(format!("rel_tol must lie in (0, 1), got {}", self.rel_tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SvtOutcome {
    pub x: DenseMatrix,
    /// Singular values of `x` that survived shrinkage.
    pub rank: usize,
    pub iterations: usize,
    /// `‖P_Omega(M - X)‖_F / ‖P_Omega(M)‖_F` after every iteration.
    pub residual_history: Vec<f64>,
    /// Residual reached `rel_tol` before `max_iters`.
    pub converged: bool,
    /// False if the inner solver ever stopped on its iteration cap.
    pub inner_converged: bool,
    /// Warm-start multiplier `k0`.
    pub warm_start: usize,
    /// Inner-solver products with the iterate; zero for custom solvers.
    pub matmul_columns: usize,
}

/// Completes `obs` with the randomized inner solver.
pub fn svt_complete(obs: &ObservedEntries, cfg: &SvtConfig, seed: u64) -> Result<SvtOutcome> {
    let mut solver = R3svdSolver::new(cfg.inner);
    let mut out = svt_complete_with(obs, cfg, &mut solver, seed)?;
    out.inner_converged = !solver.hit_iteration_limit;
    out.matmul_columns = solver.matmul_columns;
    Ok(out)
}

/// Completes `obs` with a caller-supplied inner solver.
pub fn svt_complete_with(
    obs: &ObservedEntries,
    cfg: &SvtConfig,
    solver: &mut dyn DominantSvd,
    seed: u64,
) -> Result<SvtOutcome> {
    cfg.validate()?;
    if obs.is_empty() {
        return Err(Error::param("no observed entries"));
    }
    let (m, n) = (obs.rows(), obs.cols());
    let target = obs.values();
    let norm_obs = target.iter().map(|v| v * v).collect::<CompensatedSum>().value().sqrt();
    if norm_obs == 0.0 {
        return Ok(SvtOutcome {
            x: DenseMatrix::zeros(m, n),
            rank: 0,
            iterations: 0,
            residual_history: Vec::new(),
            converged: true,
            inner_converged: true,
            warm_start: 0,
            matmul_columns: 0,
        });
    }

    let sigma1 = top_singular_value(obs, &target, cfg.inner, derive_seed(seed, 0))?;
    let warm_start = (cfg.threshold / (cfg.step * sigma1)).ceil() as usize;
    let mut y: Vec<f64> = target.iter().map(|v| warm_start as f64 * cfg.step * v).collect();

    let mut history = Vec::new();
    let mut factors = LowRankFactors::empty(m, n);
    let mut converged = false;
    let mut rank = 0;
    for k in 1..=cfg.max_iters {
        let view = obs.with_values(&y)?;
        let f = solver.above_threshold(&view, cfg.threshold, rank, derive_seed(seed, k as u64))?;
        let shrunk = shrink_singular_values(&f.sigma, cfg.threshold);
        let keep = shrunk.iter().take_while(|&&s| s > 0.0).count();
        factors = LowRankFactors::new(f.u, shrunk, f.v)?;
        factors.truncate(keep);
        rank = keep;

        let residual: Vec<f64> = obs
            .entries()
            .iter()
            .zip(&target)
            .map(|(&(i, j, _), &mv)| mv - entry(&factors, i, j))
            .collect();
        let rel = residual.iter().map(|r| r * r).collect::<CompensatedSum>().value().sqrt() / norm_obs;
        history.push(rel);
        if !rel.is_finite() || rel > DIVERGENCE_LIMIT {
            return Err(Error::Diverged {
                iteration: k,
                residual: rel,
            });
        }
        if rel <= cfg.rel_tol {
            converged = true;
            break;
        }
        for (yv, r) in y.iter_mut().zip(&residual) {
            *yv += cfg.step * r;
        }
    }

    Ok(SvtOutcome {
        x: factors.reconstruct(),
        rank,
        iterations: history.len(),
        residual_history: history,
        converged,
        inner_converged: true,
        warm_start,
        matmul_columns: 0,
    })
}

fn entry(f: &LowRankFactors, i: usize, j: usize) -> f64 {
    f.u.row(i)
        .iter()
        .zip(&f.sigma)
        .zip(f.v.row(j))
        .map(|((u, s), v)| u * s * v)
        .sum()
}

fn top_singular_value(
    obs: &ObservedEntries,
    values: &[f64],
    template: R3svdConfig,
    seed: u64,
) -> Result<f64> {
    let small = obs.rows().min(obs.cols());
    let cfg = R3svdConfig {
        t: 1,
        p: template.p.min(small - 1),
        maxit: Some(1),
        tau: 1.0,
        ..template
    };
    let (f, _) = R3svd::new(cfg, seed).run(&obs.with_values(values)?)?;
    Ok(f.sigma.first().copied().unwrap_or(0.0))
}
