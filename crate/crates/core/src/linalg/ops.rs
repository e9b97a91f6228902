use rayon::prelude::*;

use super::DenseMatrix;
use crate::error::{Error, Result};

// Below this many multiply-adds the product runs on the calling thread.
const PAR_FLOPS: usize = 1 << 18;

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Squared Frobenius norm with compensated accumulation.
pub fn frobenius_norm_sq(m: &DenseMatrix) -> f64 {
    m.data()
        .iter()
        .map(|v| v * v)
        .collect::<CompensatedSum>()
        .value()
}

/// `op(a) * op(b)` where `op` optionally transposes.
pub fn matmul(
    a: &DenseMatrix,
    b: &DenseMatrix,
    transpose_a: bool,
    transpose_b: bool,
) -> Result<DenseMatrix> {
    let (ar, ac) = if transpose_a {
        (a.cols(), a.rows())
    } else {
        a.shape()
    };
    let (br, bc) = if transpose_b {
        (b.cols(), b.rows())
    } else {
        b.shape()
    };
    if ac != br {
        return Err(Error::mismatch("matmul", (ar, ac), (br, bc)));
    }
    let out = match (transpose_a, transpose_b) {
        (false, false) => mul_nn(a, b),
        (true, false) => mul_tn(a, b),
        (false, true) => mul_nt(a, b),
        (true, true) => mul_nn(&a.transpose(), &b.transpose()),
    };
    out.debug_check_finite();
    Ok(out)
}

fn run_rows(out: &mut DenseMatrix, flops: usize, f: impl Fn(usize, &mut [f64]) + Sync + Send) {
    let cols = out.cols();
    if cols == 0 {
        return;
    }
    if flops >= PAR_FLOPS {
        out.data_mut()
            .par_chunks_mut(cols)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
    } else {
        out.data_mut()
            .chunks_mut(cols)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
    }
}

fn mul_nn(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(a.rows(), b.cols());
    let flops = a.rows() * a.cols() * b.cols();
    run_rows(&mut out, flops, |i, row| {
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            for (o, &bkj) in row.iter_mut().zip(b.row(k)) {
                *o += aik * bkj;
            }
        }
    });
    out
}

fn mul_tn(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(a.cols(), b.cols());
    let flops = a.rows() * a.cols() * b.cols();
    run_rows(&mut out, flops, |i, row| {
        for k in 0..a.rows() {
            let aki = a.get(k, i);
            if aki == 0.0 {
                continue;
            }
            for (o, &bkj) in row.iter_mut().zip(b.row(k)) {
                *o += aki * bkj;
            }
        }
    });
    out
}

fn mul_nt(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(a.rows(), b.rows());
    let flops = a.rows() * a.cols() * b.rows();
    run_rows(&mut out, flops, |i, row| {
        let ai = a.row(i);
        for (j, o) in row.iter_mut().enumerate() {
            *o = ai.iter().zip(b.row(j)).map(|(x, y)| x * y).sum();
        }
    });
    out
}

/// A matrix that can be applied to dense blocks from either side.
///
/// The randomized decompositions only touch their input through this trait,
/// so a sparse or implicit matrix can stand in for a [`DenseMatrix`].
pub trait LinearOperator: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `A * x`, with `x` of shape `ncols x s`.
    fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix>;
    /// `A^T * x`, with `x` of shape `nrows x s`.
    fn apply_transpose(&self, x: &DenseMatrix) -> Result<DenseMatrix>;
    fn frobenius_norm_sq(&self) -> f64;
}

impl LinearOperator for DenseMatrix {
    fn nrows(&self) -> usize {
        self.rows()
    }

    fn ncols(&self) -> usize {
        self.cols()
    }

    fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        matmul(self, x, false, false)
    }

    fn apply_transpose(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        matmul(self, x, true, false)
    }

    fn frobenius_norm_sq(&self) -> f64 {
        frobenius_norm_sq(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| {
            let mut s = 0.0;
            for k in 0..a.cols() {
                s += a.get(i, k) * b.get(k, j);
            }
            s
        })
    }

    fn lcg_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut s = seed;
        DenseMatrix::from_fn(rows, cols, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    #[test]
    fn identity_left_multiply() {
        let m = DenseMatrix::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0], vec![7.0, 8.0]]).unwrap();
        let p = matmul(&DenseMatrix::identity(3), &m, false, false).unwrap();
        assert_eq!(p, m);
    }

    #[test]
    fn hand_product() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[vec![5.0], vec![6.0]]).unwrap();
        let p = matmul(&a, &b, false, false).unwrap();
        assert_eq!(p.data(), &[17.0, 39.0]);
    }

    #[test]
    fn matches_triple_loop_all_transpose_flags() {
        let a = lcg_matrix(7, 5, 1);
        let b = lcg_matrix(5, 4, 2);
        let expect = naive(&a, &b);
        let at = a.transpose();
        let bt = b.transpose();
        for (x, y, ta, tb) in [
            (&a, &b, false, false),
            (&at, &b, true, false),
            (&a, &bt, false, true),
            (&at, &bt, true, true),
        ] {
            let got = matmul(x, y, ta, tb).unwrap();
            let diff = got.sub(&expect).unwrap().max_abs();
            assert!(diff <= 1e-12, "flags ({ta},{tb}) diff {diff}");
        }
    }

    #[test]
    fn parallel_path_matches_naive() {
        let a = lcg_matrix(64, 64, 3);
        let b = lcg_matrix(64, 64, 4);
        let diff = matmul(&a, &b, false, false)
            .unwrap()
            .sub(&naive(&a, &b))
            .unwrap()
            .max_abs();
        assert!(diff <= 1e-12);
    }

    #[test]
    fn dimension_mismatch_names_shapes() {
        let a = DenseMatrix::zeros(2, 3);
        let b = DenseMatrix::zeros(2, 3);
        let msg = matmul(&a, &b, false, false).unwrap_err().to_string();
        assert!(msg.contains("2x3"), "{msg}");
    }

    #[test]
    fn frobenius_examples() {
        let a = DenseMatrix::from_rows(&[vec![3.0, 4.0]]).unwrap();
        assert_eq!(frobenius_norm_sq(&a), 25.0);
        assert_eq!(frobenius_norm_sq(&DenseMatrix::zeros(3, 3)), 0.0);
        let s = [5.0, 4.0, 3.0, 2.0, 1.0];
        assert_eq!(frobenius_norm_sq(&DenseMatrix::from_diag(&s)), 55.0);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut c = CompensatedSum::new();
        c.add(1.0);
        for _ in 0..10 {
            c.add(1e-16);
        }
        assert!((c.value() - (1.0 + 1e-15)).abs() < 1e-30 + f64::EPSILON * 1e-1);
    }
}
