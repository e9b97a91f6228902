//! Independent oracles shared by the integration suites.
#![allow(dead_code)]

use nalgebra::DMatrix;
use r3svd::completion::{DominantSvd, SparseView};
use r3svd::linalg::{DenseMatrix, LowRankFactors};
use r3svd::sampling::gaussian_matrix;
use r3svd::Result;
use statrs::distribution::{ContinuousCDF, Normal};

pub fn to_na(a: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.rows(), a.cols(), a.data())
}

pub fn from_na(m: &DMatrix<f64>) -> DenseMatrix {
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// All singular values, descending, from nalgebra's dense SVD.
pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    if a.rows() == 0 || a.cols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = to_na(a).singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Best achievable `‖A - X‖_F` over rank-`k` matrices `X`.
pub fn optimal_error(a: &DenseMatrix, k: usize) -> f64 {
    singular_values(a).iter().skip(k).map(|s| s * s).sum::<f64>().sqrt()
}

/// Entries i.i.d. standard normal, reproducible from `seed`.
pub fn gaussian(m: usize, n: usize, seed: u64) -> DenseMatrix {
    gaussian_matrix(m, n, seed).matrix
}

/// Product by the textbook triple loop.
pub fn naive_matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    assert_eq!(a.cols(), b.rows());
    DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| {
        (0..a.cols()).map(|k| a.get(i, k) * b.get(k, j)).sum()
    })
}

pub fn fro(a: &DenseMatrix) -> f64 {
    a.data().iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// One-sample Kolmogorov-Smirnov statistic against N(0, 1).
pub fn ks_statistic(samples: &[f64]) -> f64 {
    let normal = Normal::standard();
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at level 0.01.
pub fn ks_critical_001(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Inner solver for SVT backed by a full dense SVD.
pub struct FullSvd;

impl DominantSvd for FullSvd {
    fn above_threshold(
        &mut self,
        y: &SparseView<'_>,
        threshold: f64,
        _rank_hint: usize,
        _seed: u64,
    ) -> Result<LowRankFactors> {
        let svd = to_na(&y.to_dense()).svd(true, true);
        let u = svd.u.expect("u requested");
        let vt = svd.v_t.expect("v requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        order.retain(|&k| svd.singular_values[k] > threshold);
        let uu = DenseMatrix::from_fn(u.nrows(), order.len(), |i, c| u[(i, order[c])]);
        let vv = DenseMatrix::from_fn(vt.ncols(), order.len(), |j, c| vt[(order[c], j)]);
        let sigma = order.iter().map(|&k| svd.singular_values[k]).collect();
        LowRankFactors::new(uu, sigma, vv)
    }
}
