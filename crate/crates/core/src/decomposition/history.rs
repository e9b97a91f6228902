use serde::{Deserialize, Serialize};

use crate::linalg::DenseMatrix;

/// Why a decomposition stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Estimated energy reached the threshold.
    EnergyThreshold,
    /// Smallest appended singular value fell below the caller's floor.
    SigmaFloor,
    /// The leftover space carried no more energy above round-off.
    Exhausted,
    /// `‖A‖_F = 0`.
    ZeroMatrix,
    /// Iteration (or rank) cap reached first.
    IterationLimit,
}

impl StopReason {
    pub fn is_converged(self) -> bool {
        !matches!(self, StopReason::IterationLimit)
    }
}

/// Column/row counts of the block intermediates of one iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockAudit {
    /// Columns of the sampling block `G_i`.
    pub sample_cols: usize,
    /// Columns of `Y_i = A G_i`.
    pub sketch_cols: usize,
    /// Columns of the orthonormal basis `Q_i` (after power rounds).
    pub basis_cols: usize,
    /// Rows of `B_i = Q_i^T A`.
    pub block_rows: usize,
    /// Narrowest and widest block seen anywhere in the iteration,
    /// power-scheme intermediates included.
    pub min_width: usize,
    pub max_width: usize,
}

impl BlockAudit {
    /// True when every intermediate had exactly `width` columns (or rows).
    pub fn is_uniform(&self, width: usize) -> bool {
        self.min_width == width && self.max_width == width
    }
}

/// The per-iteration block intermediates. Every field is at most `t + p`
/// columns wide (or rows tall, for `b`), independent of the rank reached.
#[derive(Debug, Default)]
pub struct IterationWorkspace {
    pub y: Option<DenseMatrix>,
    pub q_block: Option<DenseMatrix>,
    pub b: Option<DenseMatrix>,
    sample_cols: usize,
    min_width: usize,
    max_width: usize,
}

impl IterationWorkspace {
    pub fn new(sample_cols: usize) -> Self {
        IterationWorkspace {
            sample_cols,
            min_width: sample_cols,
            max_width: sample_cols,
            ..Default::default()
        }
    }

    /// Records a transient block of the given width.
    pub fn note(&mut self, width: usize) {
        self.min_width = self.min_width.min(width);
        self.max_width = self.max_width.max(width);
    }

    pub fn set_y(&mut self, y: DenseMatrix) {
        self.note(y.cols());
        self.y = Some(y);
    }

    pub fn set_q(&mut self, q: DenseMatrix) {
        self.note(q.cols());
        self.q_block = Some(q);
    }

    pub fn set_b(&mut self, b: DenseMatrix) {
        self.note(b.rows());
        self.b = Some(b);
    }

    pub fn audit(&self) -> BlockAudit {
        BlockAudit {
            sample_cols: self.sample_cols,
            sketch_cols: self.y.as_ref().map_or(0, DenseMatrix::cols),
            basis_cols: self.q_block.as_ref().map_or(0, DenseMatrix::cols),
            block_rows: self.b.as_ref().map_or(0, DenseMatrix::rows),
            min_width: self.min_width,
            max_width: self.max_width,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Singular values appended this iteration, in append order.
    pub sigma: Vec<f64>,
    /// Estimated energy fraction after the last appended value.
    pub energy: f64,
    /// Columns multiplied by `A` or `A^T` during the iteration.
    pub matmul_columns: usize,
    pub wall_ms: f64,
    pub audit: BlockAudit,
}

/// Trace of a decomposition run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproximationHistory {
    /// `‖A‖_F^2`, computed once before the first iteration.
    pub fro_sq: f64,
    pub iterations: Vec<IterationRecord>,
    /// Estimated energy fraction after each appended singular value.
    pub energy: Vec<f64>,
    pub stop_reason: StopReason,
    pub converged: bool,
    pub matmul_columns: usize,
    pub wall_ms: f64,
}

impl ApproximationHistory {
    pub(crate) fn new(fro_sq: f64) -> Self {
        ApproximationHistory {
            fro_sq,
            iterations: Vec::new(),
            energy: Vec::new(),
            stop_reason: StopReason::IterationLimit,
            converged: false,
            matmul_columns: 0,
            wall_ms: 0.0,
        }
    }

    pub(crate) fn finish(&mut self, reason: StopReason, matmul_columns: usize, wall_ms: f64) {
        self.stop_reason = reason;
        self.converged = reason.is_converged();
        self.matmul_columns = matmul_columns;
        self.wall_ms = wall_ms;
    }

    /// Final estimated energy fraction; 1 for the zero matrix.
    pub fn final_energy(&self) -> f64 {
        match self.stop_reason {
            StopReason::ZeroMatrix => 1.0,
            _ => self.energy.last().copied().unwrap_or(0.0),
        }
    }

    /// Number of outer iterations performed.
    pub fn iteration_count(&self) -> usize {
        self.iterations.len()
    }
}
