//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 finished without
//! converging (outputs still written), 3 completion diverged.

mod commands;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::decomposition::{R3svdConfig, SampleRefresh};
use crate::error::Error;
use crate::synthetic::SpectrumSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "r3svd", version, about = "Rank-revealing randomized SVD")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Low-rank factors of a MatrixMarket matrix, grown until the energy target is met.
    Approx(ApproxArgs),
    /// Low-rank reconstruction of a PGM image.
    Compress(CompressArgs),
    /// Fill in a partially observed matrix by singular value thresholding.
    Complete(CompleteArgs),
    /// Compare the incremental, restarting and fixed-rank methods over several seeds.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RefreshArg {
    Fresh,
    Recycled,
}

impl From<RefreshArg> for SampleRefresh {
    fn from(r: RefreshArg) -> Self {
        match r {
            RefreshArg::Fresh => SampleRefresh::Fresh,
            RefreshArg::Recycled => SampleRefresh::Recycled,
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct DecompArgs {
    /// Target energy fraction in (0, 1].
    #[arg(long, default_value_t = 0.99)]
    pub tau: f64,
    /// Triplets appended per iteration.
    #[arg(long, default_value_t = 15)]
    pub t: usize,
    /// Oversampling columns.
    #[arg(long, default_value_t = 5)]
    pub p: usize,
    /// Power iterations per block.
    #[arg(long, default_value_t = 0)]
    pub q: usize,
    /// Iteration cap (default: enough to reach full rank).
    #[arg(long)]
    pub maxit: Option<usize>,
    #[arg(long, value_enum, default_value_t = RefreshArg::Fresh)]
    pub refresh: RefreshArg,
    #[arg(long, env = "R3SVD_SEED", default_value_t = 0)]
    pub seed: u64,
}

impl DecompArgs {
    pub fn config(&self) -> R3svdConfig {
        R3svdConfig {
            t: self.t,
            p: self.p,
            q: self.q,
            maxit: self.maxit,
            tau: self.tau,
            refresh: self.refresh.into(),
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct ReportArgs {
    /// Append a JSON run report to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Leave wall times out of reports.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct ApproxArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Factors go to <PREFIX>_U.mtx, <PREFIX>_S.mtx and <PREFIX>_V.mtx.
    #[arg(long)]
    pub out_prefix: PathBuf,
    #[command(flatten)]
    pub decomp: DecompArgs,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the reconstruction after every N iterations.
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    #[command(flatten)]
    pub decomp: DecompArgs,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Args)]
pub struct CompleteArgs {
    /// Coordinate MatrixMarket file of observed entries.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Completed matrix, MatrixMarket array format.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the completed matrix as a PGM image.
    #[arg(long)]
    pub out_pgm: Option<PathBuf>,
    /// Override the row count from the file header.
    #[arg(long)]
    pub rows: Option<usize>,
    /// Override the column count from the file header.
    #[arg(long)]
    pub cols: Option<usize>,
    /// Full matrix to measure recovery error against.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Shrinkage threshold (default 5 sqrt(m n)).
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Step size (default 1.2 / observed fraction).
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, default_value_t = 1e-4)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    /// Inner solver oversampling.
    #[arg(long, default_value_t = 10)]
    pub p: usize,
    /// Inner solver power iterations.
    #[arg(long, default_value_t = 15)]
    pub q: usize,
    #[arg(long, env = "R3SVD_SEED", default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// MatrixMarket input; alternative to --synthetic.
    #[arg(long = "in", conflicts_with = "synthetic", required_unless_present = "synthetic")]
    pub input: Option<PathBuf>,
    /// gap:r, exp:rate or poly:deg.
    #[arg(long, value_parser = parse_spectrum)]
    pub synthetic: Option<SpectrumSpec>,
    /// Rows of the synthetic matrix.
    #[arg(long, default_value_t = 200)]
    pub rows: usize,
    /// Columns of the synthetic matrix.
    #[arg(long, default_value_t = 150)]
    pub cols: usize,
    /// Number of seeds; run k uses seed + k.
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,
    /// Restarting baseline: first rank (default t).
    #[arg(long)]
    pub t0: Option<usize>,
    /// Restarting baseline: rank increment (default t).
    #[arg(long)]
    pub delta_t: Option<usize>,
    /// Restarting baseline: rank cap (default min(m, n)).
    #[arg(long)]
    pub max_rank: Option<usize>,
    #[command(flatten)]
    pub decomp: DecompArgs,
    #[command(flatten)]
    pub report: ReportArgs,
}

fn parse_spectrum(s: &str) -> Result<SpectrumSpec, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Approx(a) => commands::approx(&a),
        Command::Compress(a) => commands::compress(&a),
        Command::Complete(a) => commands::complete(&a),
        Command::Bench(a) => commands::bench(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Diverged { .. } => EXIT_DIVERGED,
                _ => EXIT_USAGE,
            }
        }
    }
}
