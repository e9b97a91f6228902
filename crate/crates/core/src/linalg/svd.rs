//! Economy SVD of small blocks by one-sided Jacobi.
//!
//! For a short-and-wide `s x n` block the rows are rotated pairwise until they
//! are mutually orthogonal. The accumulated rotations give `U`, the row norms
//! give the singular values and the normalized rows give `V`. Orthogonality is
//! enforced relative to the row norms, so small singular values keep full
//! relative accuracy.

use super::DenseMatrix;
use crate::error::Result;

const MAX_SWEEPS: usize = 80;

/// Economy SVD `b = u * diag(sigma) * v^T`.
///
/// For `s <= n` the shapes are `u: s x s`, `sigma: s`, `v: n x s`. Taller
/// inputs are handled through the transpose and return `k = min(s, n)`
/// triplets. `sigma` is non-increasing.
pub fn block_svd(b: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix)> {
    b.check_finite()?;
    if b.rows() > b.cols() {
        let (u, s, v) = jacobi_rows(&b.transpose());
        return Ok((v, s, u));
    }
    Ok(jacobi_rows(b))
}

fn jacobi_rows(b: &DenseMatrix) -> (DenseMatrix, Vec<f64>, DenseMatrix) {
    let (s, n) = b.shape();
    let mut w: Vec<Vec<f64>> = (0..s).map(|i| b.row(i).to_vec()).collect();
    // columns of the accumulated rotation, stored as rows of its transpose
    let mut jt: Vec<Vec<f64>> = (0..s)
        .map(|i| {
            let mut e = vec![0.0; s];
            e[i] = 1.0;
            e
        })
        .collect();
    let mut norms: Vec<f64> = w.iter().map(|r| dot(r, r)).collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..s {
            for j in i + 1..s {
                let a = norms[i];
                let bb = norms[j];
                if a == 0.0 || bb == 0.0 {
                    continue;
                }
                let g = dot(&w[i], &w[j]);
                if g.abs() <= f64::EPSILON * (a * bb).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (bb - a) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                let (lo, hi) = w.split_at_mut(j);
                rotate(&mut lo[i], &mut hi[0], c, sn);
                let (lo, hi) = jt.split_at_mut(j);
                rotate(&mut lo[i], &mut hi[0], c, sn);
                norms[i] = dot(&w[i], &w[i]);
                norms[j] = dot(&w[j], &w[j]);
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma_raw: Vec<f64> = w.iter().map(|r| dot(r, r).sqrt()).collect();
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&x, &y| sigma_raw[y].total_cmp(&sigma_raw[x]));

    let mut u = DenseMatrix::zeros(s, s);
    let mut v = DenseMatrix::zeros(n, s);
    let mut sigma = Vec::with_capacity(s);
    let mut v_cols: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut missing = Vec::new();
    for (c, &src) in order.iter().enumerate() {
        let sv = sigma_raw[src];
        sigma.push(sv);
        for r in 0..s {
            u.set(r, c, jt[src][r]);
        }
        if sv > 0.0 {
            v_cols.push(w[src].iter().map(|x| x / sv).collect());
        } else {
            v_cols.push(Vec::new());
            missing.push(c);
        }
    }
    complete_orthonormal(&mut v_cols, &missing, n);
    for (c, col) in v_cols.iter().enumerate() {
        for (r, &x) in col.iter().enumerate() {
            v.set(r, c, x);
        }
    }
    (u, sigma, v)
}

/// Fills the listed (empty) columns with unit vectors orthogonal to every
/// other column, drawn from the standard basis by Gram-Schmidt.
fn complete_orthonormal(cols: &mut [Vec<f64>], missing: &[usize], n: usize) {
    let mut candidate = 0;
    for &c in missing {
        loop {
            assert!(candidate < n, "cannot complete orthonormal set");
            let mut e = vec![0.0; n];
            e[candidate] = 1.0;
            candidate += 1;
            // two passes of classical Gram-Schmidt
            for _ in 0..2 {
                for other in cols.iter().filter(|o| !o.is_empty()) {
                    let d = dot(other, &e);
                    for (x, o) in e.iter_mut().zip(other) {
                        *x -= d * o;
                    }
                }
            }
            let nrm = dot(&e, &e).sqrt();
            if nrm > 1e-8 {
                e.iter_mut().for_each(|x| *x /= nrm);
                cols[c] = e;
                break;
            }
        }
    }
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let xa = *a;
        let yb = *b;
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius_norm_sq, matmul};

    fn reconstruct(u: &DenseMatrix, s: &[f64], v: &DenseMatrix) -> DenseMatrix {
        matmul(&u.scale_columns(s), v, false, true).unwrap()
    }

    fn orth(q: &DenseMatrix) -> f64 {
        matmul(q, q, true, false)
            .unwrap()
            .sub(&DenseMatrix::identity(q.cols()))
            .unwrap()
            .max_abs()
    }

    #[test]
    fn diagonal_block() {
        let b = DenseMatrix::from_diag(&[3.0, 1.0]);
        let (u, s, v) = block_svd(&b).unwrap();
        assert_eq!(s, vec![3.0, 1.0]);
        for i in 0..2 {
            assert!((u.get(i, i).abs() - 1.0).abs() < 1e-15);
            assert!((v.get(i, i).abs() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn unsorted_diagonal_is_sorted() {
        let b = DenseMatrix::from_diag(&[1.0, 4.0, 2.0]);
        let (u, s, v) = block_svd(&b).unwrap();
        assert_eq!(s, vec![4.0, 2.0, 1.0]);
        assert!(reconstruct(&u, &s, &v).sub(&b).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn zero_block() {
        let (u, s, v) = block_svd(&DenseMatrix::zeros(2, 5)).unwrap();
        assert_eq!(s, vec![0.0, 0.0]);
        assert!(orth(&u) < 1e-15);
        assert!(orth(&v) < 1e-15);
    }

    #[test]
    fn rank_deficient_rows_complete_v() {
        let b = DenseMatrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]]).unwrap();
        let (u, s, v) = block_svd(&b).unwrap();
        assert!((s[0] - 2f64.sqrt()).abs() < 1e-15);
        assert!(s[1].abs() < 1e-15);
        assert!(orth(&v) < 1e-12);
        assert!(reconstruct(&u, &s, &v).sub(&b).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn tall_block_through_transpose() {
        let b = DenseMatrix::from_fn(6, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let (u, s, v) = block_svd(&b).unwrap();
        assert_eq!(u.shape(), (6, 3));
        assert_eq!(v.shape(), (3, 3));
        let rel = frobenius_norm_sq(&reconstruct(&u, &s, &v).sub(&b).unwrap()) / frobenius_norm_sq(&b);
        assert!(rel.sqrt() < 1e-13);
    }

    #[test]
    fn non_finite_rejected() {
        let b = DenseMatrix::from_vec(1, 2, vec![1.0, f64::INFINITY]).unwrap();
        assert!(block_svd(&b).is_err());
    }
}
