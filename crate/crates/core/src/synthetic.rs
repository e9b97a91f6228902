//! Test matrices with prescribed singular values.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{householder_qr, matmul, DenseMatrix};
use crate::sampling::{derive_seed, gaussian_matrix};

/// Spectrum shapes accepted by `bench --synthetic`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpectrumSpec {
    /// `gap:r`: `r` values of 10 followed by values of 1e-6.
    Gap { rank: usize },
    /// `exp:rate`: `sigma_i = exp(-rate * i)`, `i = 1, 2, ...`.
    Exp { rate: f64 },
    /// `poly:deg`: `sigma_i = i^(-deg)`.
    Poly { degree: f64 },
}

pub const GAP_HIGH: f64 = 10.0;
pub const GAP_LOW: f64 = 1e-6;

impl SpectrumSpec {
    /// The first `len` singular values, descending.
    pub fn values(&self, len: usize) -> Vec<f64> {
        (1..=len)
            .map(|i| match *self {
                SpectrumSpec::Gap { rank } => {
                    if i <= rank {
                        GAP_HIGH
                    } else {
                        GAP_LOW
                    }
                }
                SpectrumSpec::Exp { rate } => (-rate * i as f64).exp(),
                SpectrumSpec::Poly { degree } => (i as f64).powf(-degree),
            })
            .collect()
    }
}

impl FromStr for SpectrumSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::param(format!("unknown spectrum spec '{s}' (expected gap:r, exp:rate or poly:deg)"));
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "gap" => {
                let rank: usize = arg.parse().map_err(|_| bad())?;
                Ok(SpectrumSpec::Gap { rank })
            }
            "exp" | "poly" => {
                let x: f64 = arg.parse().map_err(|_| bad())?;
                if !(x.is_finite() && x > 0.0) {
                    return Err(bad());
                }
                Ok(if kind == "exp" {
                    SpectrumSpec::Exp { rate: x }
                } else {
                    SpectrumSpec::Poly { degree: x }
                })
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for SpectrumSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectrumSpec::Gap { rank } => write!(f, "gap:{rank}"),
            SpectrumSpec::Exp { rate } => write!(f, "exp:{rate}"),
            SpectrumSpec::Poly { degree } => write!(f, "poly:{degree}"),
        }
    }
}

/// `U diag(sigma) V^T` with `U`, `V` the orthonormal factors of seeded
/// Gaussian blocks. `sigma` may be shorter than `min(m, n)`.
pub fn matrix_with_spectrum(m: usize, n: usize, sigma: &[f64], seed: u64) -> Result<DenseMatrix> {
    let k = sigma.len();
    if k > m.min(n) {
        return Err(Error::param(format!(
            "{k} singular values do not fit a {m}x{n} matrix"
        )));
    }
    if k == 0 {
        return Ok(DenseMatrix::zeros(m, n));
    }
    let (u, _) = householder_qr(&gaussian_matrix(m, k, derive_seed(seed, 0)).matrix)?;
    let (v, _) = householder_qr(&gaussian_matrix(n, k, derive_seed(seed, 1)).matrix)?;
    matmul(&u.scale_columns(sigma), &v, false, true)
}

/// Convenience for `matrix_with_spectrum(m, n, spec.values(min(m, n)), seed)`.
pub fn synthetic_matrix(m: usize, n: usize, spec: SpectrumSpec, seed: u64) -> Result<DenseMatrix> {
    matrix_with_spectrum(m, n, &spec.values(m.min(n)), seed)
}
