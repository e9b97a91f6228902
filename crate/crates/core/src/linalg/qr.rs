//! Economy Householder QR.
//!
//! Reflectors are built column by column on a column-major copy of the input.
//! The diagonal of `R` is forced non-negative so the factorization is unique
//! for full-rank input and reproducible across runs.

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Economy QR: `q` is `rows x cols` with orthonormal columns, `r` is upper
/// triangular with a non-negative diagonal.
pub fn householder_qr(m: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    if m.rows() < m.cols() {
        return Err(Error::param(format!(
            "householder_qr needs rows >= cols, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let f = factor(m, None);
    let n = m.cols();
    let mut r = DenseMatrix::zeros(n, n);
    for (k, col) in f.r_cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            r.set(i, k, v);
        }
    }
    Ok((f.q, r))
}

/// Orthonormal basis of the column space of `m`, skipping columns whose
/// component orthogonal to the columns already kept has norm `<= drop_tol`.
///
/// Returns the basis (`rows x kept.len()`) and the indices of the kept input
/// columns. Column `c` of the basis has a positive inner product with input
/// column `kept[c]`.
pub fn orthonormal_basis(m: &DenseMatrix, drop_tol: f64) -> (DenseMatrix, Vec<usize>) {
    let f = factor(m, Some(drop_tol));
    (f.q, f.kept)
}

struct Factored {
    q: DenseMatrix,
    r_cols: Vec<Vec<f64>>,
    kept: Vec<usize>,
}

fn factor(m: &DenseMatrix, drop_tol: Option<f64>) -> Factored {
    let (rows, cols) = m.shape();
    let mut a: Vec<Vec<f64>> = (0..cols).map(|j| m.column(j)).collect();
    // One entry per reflector; reflector k acts on rows k.. . `None` marks an
    // exactly-zero column in full mode (identity reflector).
    let mut reflectors: Vec<Option<Vec<f64>>> = Vec::new();
    let mut r_cols: Vec<Vec<f64>> = Vec::with_capacity(cols);
    let mut kept = Vec::new();

    for j in 0..cols {
        let k = reflectors.len();
        if k >= rows {
            break;
        }
        let tail_norm = norm(&a[j][k..]);
        if let Some(tol) = drop_tol {
            if !(tail_norm > tol) {
                continue;
            }
        }
        kept.push(j);
        if tail_norm == 0.0 {
            reflectors.push(None);
            let mut rc = a[j][..k].to_vec();
            rc.resize(cols.min(rows), 0.0);
            r_cols.push(rc);
            continue;
        }
        let x0 = a[j][k];
        let alpha = if x0 >= 0.0 { -tail_norm } else { tail_norm };
        let mut v = a[j][k..].to_vec();
        v[0] -= alpha;
        let vnorm = norm(&v);
        for x in v.iter_mut() {
            *x /= vnorm;
        }
        a[j][k] = alpha;
        for x in a[j][k + 1..].iter_mut() {
            *x = 0.0;
        }
        for col in a.iter_mut().skip(j + 1) {
            reflect(&v, &mut col[k..]);
        }
        let mut rc = a[j][..=k].to_vec();
        rc.resize(cols.min(rows), 0.0);
        r_cols.push(rc);
        reflectors.push(Some(v));
    }

    let s = reflectors.len();
    // Q = H_0 H_1 ... H_{s-1} applied to the first s columns of the identity.
    let mut q_cols: Vec<Vec<f64>> = (0..s)
        .map(|c| {
            let mut e = vec![0.0; rows];
            e[c] = 1.0;
            e
        })
        .collect();
    for (k, refl) in reflectors.iter().enumerate().rev() {
        if let Some(v) = refl {
            for col in q_cols.iter_mut() {
                reflect(v, &mut col[k..]);
            }
        }
    }

    // Sign convention: non-negative diagonal of R.
    let flip: Vec<bool> = r_cols.iter().enumerate().map(|(c, rc)| rc[c] < 0.0).collect();
    for (c, col) in q_cols.iter_mut().enumerate() {
        if flip[c] {
            col.iter_mut().for_each(|x| *x = -*x);
        }
    }
    for rc in r_cols.iter_mut() {
        for (i, x) in rc.iter_mut().enumerate() {
            if i < s && flip[i] {
                *x = -*x;
            }
        }
    }

    let mut q = DenseMatrix::zeros(rows, s);
    for (c, col) in q_cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            q.set(i, c, v);
        }
    }
    Factored { q, r_cols, kept }
}

#[inline]
fn reflect(v: &[f64], x: &mut [f64]) {
    let d: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    let d2 = 2.0 * d;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= d2 * vi;
    }
}

#[inline]
fn norm(x: &[f64]) -> f64 {
    // scaled to avoid overflow on huge entries
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let ss: f64 = x.iter().map(|v| (v / scale) * (v / scale)).sum();
    scale * ss.sqrt()
}
