use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use smw_core::fixtures::InstanceKind;

use crate::bundle::{BaseSource, ProblemBundle};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "smw",
    version,
    about = "Solve and invert A + sum_k U_k V_k^T without refactoring A"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve (A + sum U_k V_k^T) x = b and write x.
    Solve {
        #[command(flatten)]
        bundle: BundleArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the explicit inverse of A + sum U_k V_k^T.
    Invert {
        #[command(flatten)]
        bundle: BundleArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the assembled (unfactored) capacitance matrix.
    Capacitance {
        #[command(flatten)]
        bundle: BundleArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the update path against a dense direct solve.
    Check {
        #[command(flatten)]
        bundle: BundleArgs,
        /// A previously written solution to compare as well.
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Time refactor-and-solve against cached-base update solves.
    Bench(BenchArgs),
    /// Generate a problem bundle on disk.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Args)]
pub struct BundleArgs {
    /// Base matrix file, or the literal `identity` (requires --n).
    #[arg(long)]
    pub base: String,
    #[arg(long = "n")]
    pub n: Option<usize>,
    /// Update manifest (JSON); omit for no updates.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub rhs: Option<PathBuf>,
}

impl BundleArgs {
    pub fn to_bundle(&self) -> Result<ProblemBundle, CliError> {
        let base = if self.base == "identity" {
            let n = self
                .n
                .ok_or_else(|| CliError::Usage("--base identity requires --n".into()))?;
            BaseSource::Identity(n)
        } else {
            BaseSource::File(PathBuf::from(&self.base))
        };
        Ok(ProblemBundle {
            base,
            manifest: self.manifest.clone(),
            rhs: self.rhs.clone(),
        })
    }
}

fn parse_kind(s: &str) -> Result<InstanceKind, String> {
    s.parse().map_err(|e: smw_core::SmwError| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long = "n", default_value_t = 1500)]
    pub n: usize,
    /// Number of update pairs.
    #[arg(long, default_value_t = 2)]
    pub pairs: usize,
    /// Rank of each update pair.
    #[arg(long, default_value_t = 4)]
    pub rank: usize,
    /// Right-hand sides solved against the fixed base.
    #[arg(long, default_value_t = 50)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = parse_kind, default_value = "random-dense")]
    pub kind: InstanceKind,
    #[arg(long, default_value_t = 2.0)]
    pub conditioning: f64,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long, value_parser = parse_kind, default_value = "random-dense")]
    pub kind: InstanceKind,
    #[arg(long = "n", default_value_t = 50)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub pairs: usize,
    #[arg(long, default_value_t = 1)]
    pub rank: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2.0)]
    pub conditioning: f64,
    /// Block count for cyclic-banded-corner.
    #[arg(long, default_value_t = 8)]
    pub nblocks: usize,
    /// Block size for cyclic-banded-corner.
    #[arg(long, default_value_t = 1)]
    pub blocksize: usize,
    /// 1 = block tridiagonal, 2 = block pentadiagonal.
    #[arg(long, default_value_t = 1)]
    pub bandwidth: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}
