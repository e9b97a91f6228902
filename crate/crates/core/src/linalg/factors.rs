use super::{matmul, orthonormality_residual, DenseMatrix};
use crate::error::{Error, Result};

/// Truncated SVD `u * diag(sigma) * v^T` of rank `sigma.len()`.
#[derive(Clone, Debug, PartialEq)]
pub struct LowRankFactors {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

impl LowRankFactors {
    pub fn new(u: DenseMatrix, sigma: Vec<f64>, v: DenseMatrix) -> Result<Self> {
        if u.cols() != sigma.len() || v.cols() != sigma.len() {
            return Err(Error::param(format!(
                "factor ranks disagree: u has {} columns, sigma {}, v {}",
                u.cols(),
                sigma.len(),
                v.cols()
            )));
        }
        Ok(LowRankFactors { u, sigma, v })
    }

    /// Rank-0 factors for an `m x n` matrix.
    pub fn empty(m: usize, n: usize) -> Self {
        LowRankFactors {
            u: DenseMatrix::zeros(m, 0),
            sigma: Vec::new(),
            v: DenseMatrix::zeros(n, 0),
        }
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.u.rows(), self.v.rows())
    }

    /// Dense `u * diag(sigma) * v^T`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let (m, n) = self.shape();
        if self.rank() == 0 {
            return DenseMatrix::zeros(m, n);
        }
        matmul(&self.u.scale_columns(&self.sigma), &self.v, false, true).expect("factor shapes")
    }

    /// Keeps the leading `k` triplets.
    pub fn truncate(&mut self, k: usize) {
        if k >= self.rank() {
            return;
        }
        self.u = self.u.leading_columns(k);
        self.v = self.v.leading_columns(k);
        self.sigma.truncate(k);
    }

    /// Stable reorder of the triplets by non-increasing singular value.
    pub fn sort_descending(&mut self) {
        let mut idx: Vec<usize> = (0..self.rank()).collect();
        idx.sort_by(|&a, &b| self.sigma[b].total_cmp(&self.sigma[a]));
        if idx.iter().enumerate().all(|(i, &j)| i == j) {
            return;
        }
        self.u = self.u.select_columns(&idx);
        self.v = self.v.select_columns(&idx);
        self.sigma = idx.iter().map(|&i| self.sigma[i]).collect();
    }

    /// Worst orthonormality residual over `u` and `v`.
    pub fn orthonormality_residual(&self) -> f64 {
        orthonormality_residual(&self.u).max(orthonormality_residual(&self.v))
    }
}
