//! Gaussian test matrices and projection onto the orthogonal complement of an
//! accumulated right basis.
//!
//! A block `G = (I - V V^T) Omega` is orthogonal to `V` and each of its
//! entries is marginally normal with variance `(I - V V^T)_ii`. Because the
//! blocks appended to `V` are mutually orthogonal, the projection can be
//! applied one new block at a time: `G_{i+1} = G_i - V_i (V_i^T G_i)`.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{matmul, DenseMatrix};

/// A sampling block together with the seed that generated it.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianBlock {
    pub matrix: DenseMatrix,
    pub seed: u64,
    /// Number of projections applied since the block was drawn.
    pub generation: usize,
}

/// Draws a `rows x cols` block of i.i.d. standard normals.
///
/// Entries are generated in row-major order from a ChaCha20 stream keyed by
/// `seed`, so the seed and shape determine every entry bit for bit.
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> GaussianBlock {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    GaussianBlock {
        matrix: DenseMatrix::from_vec(rows, cols, data).expect("shape"),
        seed,
        generation: 0,
    }
}

/// `m - V (V^T m)`. The `n x n` projector is never formed.
pub fn project_out(basis_v: &DenseMatrix, m: &DenseMatrix) -> Result<DenseMatrix> {
    if basis_v.rows() != m.rows() {
        return Err(Error::mismatch("project_out", basis_v.shape(), m.shape()));
    }
    if basis_v.cols() == 0 || m.cols() == 0 {
        return Ok(m.clone());
    }
    let coeff = matmul(basis_v, m, true, false)?;
    let along = matmul(basis_v, &coeff, false, false)?;
    m.sub(&along)
}

/// Short-recursion update: projects the block away from the newest basis
/// block only. `v_new` must already be orthogonal to every block applied
/// before.
pub fn update_gaussian_block(g: &GaussianBlock, v_new: &DenseMatrix) -> Result<GaussianBlock> {
    if v_new.rows() != g.matrix.rows() {
        return Err(Error::mismatch(
            "update_gaussian_block",
            v_new.shape(),
            g.matrix.shape(),
        ));
    }
    if v_new.cols() == 0 {
        return Ok(g.clone());
    }
    Ok(GaussianBlock {
        matrix: project_out(v_new, &g.matrix)?,
        seed: g.seed,
        generation: g.generation + 1,
    })
}

/// Derives an independent stream seed from a base seed (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
