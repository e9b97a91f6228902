//! Randomized low-rank decompositions.

mod config;
mod energy;
mod history;
mod r3svd;
mod restart;
mod rsvd;

use std::cell::Cell;

pub use config::{R3svdConfig, SampleRefresh};
pub use energy::{approximation_error, captured_energy, energy_percentage};
pub use history::{ApproximationHistory, BlockAudit, IterationRecord, IterationWorkspace, StopReason};
pub use r3svd::{r3svd, IterationView, PowerRoute, R3svd, DROP_RELATIVE};
pub use restart::restarting_rsvd;
pub use rsvd::{rsvd_fixed_rank, rsvd_traced, RsvdRun};

use crate::error::Result;
use crate::linalg::{DenseMatrix, LinearOperator};

/// Wraps an operator and counts the columns it is applied to.
pub(crate) struct Counted<'a, A: ?Sized> {
    inner: &'a A,
    columns: Cell<usize>,
}

impl<'a, A: LinearOperator + ?Sized> Counted<'a, A> {
    pub(crate) fn new(inner: &'a A) -> Self {
        Counted {
            inner,
            columns: Cell::new(0),
        }
    }

    pub(crate) fn columns(&self) -> usize {
        self.columns.get()
    }

    pub(crate) fn nrows(&self) -> usize {
        self.inner.nrows()
    }

    pub(crate) fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.columns.set(self.columns.get() + x.cols());
        self.inner.apply(x)
    }

    pub(crate) fn apply_transpose(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.columns.set(self.columns.get() + x.cols());
        self.inner.apply_transpose(x)
    }
}
