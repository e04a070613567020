use std::path::PathBuf;

use cfsim_core::Method;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "cfsim", version, about = "Systolic-array convolution simulator")]
pub struct Cli {
    /// Worker threads for parallel runs; defaults to every core.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time every workload layer under each method.
    Simulate(SimulateArgs),
    /// Cross product of workload layers with an architecture grid.
    Sweep(SweepArgs),
    /// Original vs lowered IFMap bytes per layer and per model.
    Overhead(OverheadArgs),
    /// Compare every method's output with the reference convolution.
    Verify(VerifyArgs),
    /// DRAM traffic of block-level subtile orders.
    Reuse(ReuseArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_name = "PATH")]
    pub workload: PathBuf,
    /// Architecture file; baseline defaults when omitted.
    #[arg(long, value_name = "PATH")]
    pub arch: Option<PathBuf>,
    /// Comma-separated methods; overrides the workload's list.
    #[arg(long, value_delimiter = ',', value_name = "NAME")]
    pub method: Vec<Method>,
    /// CSV destination; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Also run every layer functionally and fail on any mismatch.
    #[arg(long)]
    pub verify: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_name = "PATH")]
    pub workload: PathBuf,
    /// Grid file with array_sizes, word_sizes, strides, multi_tile_caps, methods.
    #[arg(long, value_name = "PATH")]
    pub sweep: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub arch: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', value_name = "NAME")]
    pub method: Vec<Method>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OverheadArgs {
    #[arg(long, value_name = "PATH")]
    pub workload: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["workload", "random"])))]
pub struct VerifyArgs {
    #[arg(long, value_name = "PATH")]
    pub workload: Option<PathBuf>,
    /// Check this many randomly drawn small layers instead of a workload.
    #[arg(long, value_name = "N")]
    pub random: Option<usize>,
    #[arg(long, value_name = "PATH")]
    pub arch: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', value_name = "NAME")]
    pub method: Vec<Method>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReuseArgs {
    #[arg(long, value_name = "PATH")]
    pub workload: PathBuf,
    /// Only `elem_bytes` is read from it.
    #[arg(long, value_name = "PATH")]
    pub arch: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    pub block_m: usize,
    #[arg(long, default_value_t = 64)]
    pub block_n: usize,
    #[arg(long, default_value_t = 32)]
    pub block_k: usize,
    /// Budget in subtile working sets.
    #[arg(long, default_value_t = 2, conflicts_with = "budget_bytes")]
    pub budget_sets: u64,
    #[arg(long)]
    pub budget_bytes: Option<u64>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}
