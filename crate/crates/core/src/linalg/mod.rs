//! Dense matrix type and the deterministic kernels the decompositions are
//! built from.

mod dense;
mod factors;
mod ops;
mod qr;
mod svd;

pub use dense::DenseMatrix;
pub use factors::LowRankFactors;
pub use ops::{frobenius_norm_sq, matmul, CompensatedSum, LinearOperator};
pub use qr::{householder_qr, orthonormal_basis};
pub use svd::block_svd;

/// Largest absolute entry of `a^T b`; the orthogonality residual used
/// throughout the tests and audits.
pub fn cross_gram_max(a: &DenseMatrix, b: &DenseMatrix) -> crate::Result<f64> {
    if a.cols() == 0 || b.cols() == 0 {
        return Ok(0.0);
    }
    Ok(matmul(a, b, true, false)?.max_abs())
}

/// `max |Q^T Q - I|`.
pub fn orthonormality_residual(q: &DenseMatrix) -> f64 {
    if q.cols() == 0 {
        return 0.0;
    }
    let g = matmul(q, q, true, false).expect("square gram");
    let mut worst = 0.0f64;
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g.get(i, j) - target).abs());
        }
    }
    worst
}
