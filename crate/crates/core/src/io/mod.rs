//! MatrixMarket and PGM files, and line-delimited JSON run reports.

mod mtx;
mod pgm;
mod report;

use std::path::Path;

pub use mtx::{
    parse_matrix_market, read_coordinate, read_dense, read_matrix_market, write_coordinate, write_dense,
    MatrixMarket,
};
pub use pgm::{parse_pgm, read_pgm, write_pgm};
pub use report::{append_report, read_reports, IterationEntry, RunReport, SCHEMA_VERSION};

use crate::error::Error;

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}
