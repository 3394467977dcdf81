// SPDX-License-Identifier: Apache-2.0

//! Command-line grammar.

use clap::{Args, Parser, Subcommand, ValueEnum};

use andor_core::model::SizeSpec;
use andor_core::spine::SpineCaps;

#[derive(Debug, Parser)]
#[command(name = "andor", version, about = "Random and/or trees and the Boolean functions they induce")]
pub struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "ANDOR_THREADS", default_value_t = 0)]
    pub threads: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<std::path::PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample labelled trees or shape statistics.
    Sample(SampleArgs),
    /// Trim an expression and report what is left.
    Trim(TrimArgs),
    /// Estimate the induced distribution on Boolean functions.
    Dist(DistArgs),
    /// Regress log p̂_k(f) on log k over a spine model.
    Scaling(ScalingArgs),
    /// Run a check suite.
    Checks(ChecksArgs),
    /// Tabulate formula complexity of every function of k variables.
    Complexity(ComplexityArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SizeArgs {
    /// Number of leaves.
    #[arg(long, visible_alias = "n")]
    pub leaves: Option<usize>,
    /// Total number of nodes.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Height of a balanced tree.
    #[arg(long)]
    pub height: Option<usize>,
}

impl SizeArgs {
    pub fn spec(&self) -> SizeSpec {
        SizeSpec { leaves: self.leaves, nodes: self.nodes, height: self.height }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CapArgs {
    /// Spine levels revealed per trial before giving up.
    #[arg(long, default_value_t = SpineCaps::default().depth_cap)]
    pub depth_cap: usize,
    /// Nodes generated per trial before giving up.
    #[arg(long, default_value_t = SpineCaps::default().node_cap)]
    pub node_cap: usize,
}

impl CapArgs {
    pub fn caps(&self) -> SpineCaps {
        SpineCaps { depth_cap: self.depth_cap, node_cap: self.node_cap, ..SpineCaps::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stat {
    Split,
    Saturation,
    Size,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub model: String,
    #[command(flatten)]
    pub size: SizeArgs,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub trials: u64,
    /// Report shape statistics instead of labelled trees.
    #[arg(long, value_enum)]
    pub stats: Option<Stat>,
}

#[derive(Debug, Clone, Args)]
pub struct TrimArgs {
    /// Expression such as "(x1&(~x2|x3))".
    pub expr: String,
    /// Number of variables; defaults to the largest index used.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct DistArgs {
    #[arg(long)]
    pub model: String,
    #[command(flatten)]
    pub size: SizeArgs,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
    /// Count only these functions (k:HEX, comma separated).
    #[arg(long, value_delimiter = ',')]
    pub targets: Vec<String>,
    #[command(flatten)]
    pub caps: CapArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ScalingArgs {
    #[arg(long)]
    pub model: String,
    /// Target function as k:HEX.
    #[arg(long = "fn")]
    pub function: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub ks: Vec<usize>,
    #[arg(long)]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub caps: CapArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Acceptance,
}

#[derive(Debug, Clone, Args)]
pub struct ChecksArgs {
    #[arg(long, value_enum)]
    pub suite: Option<Suite>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run only these criteria (comma separated ids such as 1,7a,9).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    /// JSON suite file with `suite`, `seed` and optional `only`; flags override it.
    #[arg(long)]
    pub spec: Option<std::path::PathBuf>,
}

/// Contents of a `--spec` suite file.
#[derive(Debug, Clone, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSpec {
    pub suite: Option<Suite>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub only: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ComplexityArgs {
    #[arg(long)]
    pub k: usize,
    /// Largest formula size searched.
    #[arg(long, default_value_t = 4)]
    pub max_size: usize,
}
