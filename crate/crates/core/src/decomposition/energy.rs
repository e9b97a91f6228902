use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm_sq, matmul, CompensatedSum, DenseMatrix, LowRankFactors};

/// Estimated energy fraction `sum(sigma_i^2) / ‖A‖_F^2`.
pub fn energy_percentage(sigma_partial: &[f64], fro_sq: f64) -> Result<f64> {
    if !(fro_sq > 0.0) {
        return Err(Error::param(format!("fro_sq must be positive, got {fro_sq}")));
    }
    if let Some(s) = sigma_partial.iter().find(|s| !(**s >= 0.0)) {
        return Err(Error::param(format!("singular values must be non-negative, got {s}")));
    }
    let sum: CompensatedSum = sigma_partial.iter().map(|s| s * s).collect();
    Ok(sum.value() / fro_sq)
}

/// Energy fraction actually captured by the left factor,
/// `‖U U^T A‖_F^2 / ‖A‖_F^2`, formed without assuming `U` is orthonormal.
pub fn captured_energy(a: &DenseMatrix, factors: &LowRankFactors) -> Result<f64> {
    let fro = frobenius_norm_sq(a);
    if factors.rank() == 0 {
        return Ok(if fro == 0.0 { 1.0 } else { 0.0 });
    }
    let coeff = matmul(&factors.u, a, true, false)?;
    let proj = matmul(&factors.u, &coeff, false, false)?;
    Ok(frobenius_norm_sq(&proj) / fro)
}

/// `‖A - U diag(sigma) V^T‖_F`.
pub fn approximation_error(a: &DenseMatrix, factors: &LowRankFactors) -> Result<f64> {
    Ok(frobenius_norm_sq(&a.sub(&factors.reconstruct())?).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_examples() {
        assert_eq!(energy_percentage(&[3.0, 4.0], 25.0).unwrap(), 1.0);
        assert_eq!(energy_percentage(&[], 25.0).unwrap(), 0.0);
        assert!((energy_percentage(&[4.0], 25.0).unwrap() - 0.64).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(energy_percentage(&[1.0], 0.0).is_err());
        assert!(energy_percentage(&[1.0], -1.0).is_err());
        assert!(energy_percentage(&[-1.0], 1.0).is_err());
        assert!(energy_percentage(&[f64::NAN], 1.0).is_err());
    }

    #[test]
    fn captured_energy_of_exact_factors() {
        let a = DenseMatrix::from_diag(&[3.0, 4.0]);
        let f = LowRankFactors::new(
            DenseMatrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap(),
            vec![4.0],
            DenseMatrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap(),
        )
        .unwrap();
        assert!((captured_energy(&a, &f).unwrap() - 0.64).abs() < 1e-15);
        assert!((approximation_error(&a, &f).unwrap() - 3.0).abs() < 1e-15);
    }
}
