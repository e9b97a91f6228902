use std::time::Instant;

use super::Counted;
use crate::error::{Error, Result};
use crate::linalg::{block_svd, householder_qr, matmul, DenseMatrix, LinearOperator, LowRankFactors};
use crate::sampling::gaussian_matrix;

/// Result of one fixed-rank run with its cost figures.
#[derive(Clone, Debug)]
pub struct RsvdRun {
    pub factors: LowRankFactors,
    /// Columns multiplied by `A` or `A^T`.
    pub matmul_columns: usize,
    /// Width of the sketch, `k + p`.
    pub width: usize,
    pub wall_ms: f64,
}

/// Rank-`k` randomized SVD with `p` oversampling columns and `q` power
/// iterations, driven by a Gaussian test matrix drawn from `seed`.
pub fn rsvd_fixed_rank(
    a: &DenseMatrix,
    k: usize,
    p: usize,
    q: usize,
    seed: u64,
) -> Result<LowRankFactors> {
    Ok(rsvd_traced(a, k, p, q, seed)?.factors)
}

/// [`rsvd_fixed_rank`] over any operator, also reporting cost.
pub fn rsvd_traced<A: LinearOperator + ?Sized>(
    a: &A,
    k: usize,
    p: usize,
    q: usize,
    seed: u64,
) -> Result<RsvdRun> {
    let (m, n) = (a.nrows(), a.ncols());
    if k == 0 {
        return Err(Error::param("k must be at least 1"));
    }
    if k + p > m.min(n) {
        return Err(Error::param(format!(
            "k + p = {} exceeds min(m, n) = {}",
            k + p,
            m.min(n)
        )));
    }
    let clock = Instant::now();
    let op = Counted::new(a);
    let omega = gaussian_matrix(n, k + p, seed);
    let (mut basis, _) = householder_qr(&op.apply(&omega.matrix)?)?;
    for _ in 0..q {
        let (qz, _) = householder_qr(&op.apply_transpose(&basis)?)?;
        basis = householder_qr(&op.apply(&qz)?)?.0;
    }
    let b = op.apply_transpose(&basis)?.transpose();
    let (ub, sigma, vb) = block_svd(&b)?;
    let u = matmul(&basis, &ub, false, false)?;
    let mut factors = LowRankFactors::new(u, sigma, vb)?;
    factors.truncate(k);
    Ok(RsvdRun {
        factors,
        matmul_columns: op.columns(),
        width: k + p,
        wall_ms: clock.elapsed().as_secs_f64() * 1e3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::approximation_error;

    #[test]
    fn recovers_diagonal() {
        let a = DenseMatrix::from_diag(&[5.0, 3.0, 1.0]);
        let f = rsvd_fixed_rank(&a, 3, 0, 0, 1).unwrap();
        for (got, want) in f.sigma.iter().zip([5.0, 3.0, 1.0]) {
            assert!((got - want).abs() < 1e-10);
        }
        assert!(approximation_error(&a, &f).unwrap() < 1e-10);
    }

    #[test]
    fn captures_rank_one() {
        let u0: Vec<f64> = (0..20).map(|i| (i as f64 * 0.3).sin() + 0.1).collect();
        let v0: Vec<f64> = (0..15).map(|j| (j as f64 * 0.7).cos() - 0.2).collect();
        let a = DenseMatrix::from_fn(20, 15, |i, j| u0[i] * v0[j]);
        let nu = u0.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nv = v0.iter().map(|x| x * x).sum::<f64>().sqrt();
        let f = rsvd_fixed_rank(&a, 1, 3, 0, 11).unwrap();
        assert!((f.sigma[0] - nu * nv).abs() < 1e-10);
        assert!(approximation_error(&a, &f).unwrap() <= 1e-9);
    }

    #[test]
    fn parameter_errors() {
        let a = DenseMatrix::identity(4);
        assert!(rsvd_fixed_rank(&a, 0, 1, 0, 0).is_err());
        assert!(rsvd_fixed_rank(&a, 3, 2, 0, 0).is_err());
    }

    #[test]
    fn deterministic_and_counted() {
        let a = DenseMatrix::from_fn(12, 9, |i, j| ((i * 3 + j * 5) % 7) as f64);
        let r1 = rsvd_traced(&a, 3, 2, 1, 5).unwrap();
        let r2 = rsvd_traced(&a, 3, 2, 1, 5).unwrap();
        assert_eq!(r1.factors, r2.factors);
        // sketch, one power round (two products), projection
        assert_eq!(r1.matmul_columns, 4 * 5);
        assert_eq!(r1.width, 5);
    }
}
