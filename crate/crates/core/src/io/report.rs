use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{io_err, parse_err};
use crate::decomposition::{ApproximationHistory, BlockAudit, StopReason};
use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

/// One line of a run log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub algorithm: String,
    /// Parameters as passed, echoed verbatim.
    pub config: serde_json::Value,
    pub seed: u64,
    pub rank: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_reason: Option<StopReason>,
    /// Estimated energy fraction at termination; absent for completion runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    /// Columns multiplied by `A` or `A^T` over the whole run.
    pub matmul_columns: usize,
    pub iterations: Vec<IterationEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
    /// Relative residual per iteration, for completion runs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub residual_history: Vec<f64>,
    /// Extra named figures (errors, PSNR, residuals).
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationEntry {
    pub iteration: usize,
    pub sigma: Vec<f64>,
    pub energy: f64,
    pub matmul_columns: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
    pub audit: BlockAudit,
}

impl RunReport {
    /// Builds a report from a decomposition trace. With `timing` false every
    /// wall-time field is left out, so identical runs give identical lines.
    pub fn from_history(
        algorithm: &str,
        config: &impl Serialize,
        seed: u64,
        rank: usize,
        hist: &ApproximationHistory,
        timing: bool,
    ) -> Result<Self> {
        Ok(RunReport {
            schema_version: SCHEMA_VERSION,
            algorithm: algorithm.to_string(),
            config: serde_json::to_value(config)?,
            seed,
            rank,
            converged: hist.converged,
            stop_reason: Some(hist.stop_reason),
            energy: Some(hist.final_energy()),
            matmul_columns: hist.matmul_columns,
            iterations: hist
                .iterations
                .iter()
                .map(|r| IterationEntry {
                    iteration: r.iteration,
                    sigma: r.sigma.clone(),
                    energy: r.energy,
                    matmul_columns: r.matmul_columns,
                    wall_ms: timing.then_some(r.wall_ms),
                    audit: r.audit,
                })
                .collect(),
            wall_ms: timing.then_some(hist.wall_ms),
            residual_history: Vec::new(),
            metrics: BTreeMap::new(),
        })
    }

    pub fn with_metric(mut self, name: &str, value: f64) -> Self {
        self.metrics.insert(name.to_string(), value);
        self
    }

    /// Serialized form without a trailing newline.
    pub fn to_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Appends one report line with a single write.
pub fn append_report(path: impl AsRef<Path>, report: &RunReport) -> Result<()> {
    let path = path.as_ref();
    let mut line = report.to_line()?;
    line.push('\n');
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    f.write_all(line.as_bytes()).map_err(io_err(path))
}

/// Reads every report in a line-delimited file; blank lines are skipped.
pub fn read_reports(path: impl AsRef<Path>) -> Result<Vec<RunReport>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| parse_err(path, i + 1, e.to_string())))
        .collect()
}
