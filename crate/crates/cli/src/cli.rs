//! Command-line definitions.

use std::path::PathBuf;

use bslab_core::blocks::BlockFlavor;
use bslab_core::dynamics::{AllOnesRule, ModelParams};
use bslab_core::graph::{Graph, GraphSpec};
use bslab_core::Flavor;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "bslab", version, about = "Discrete Bak-Sneppen experiments on finite graphs", args_override_self = true)]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON run configuration; command-line options override its entries.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one trajectory of the discrete or continuous-time model.
    Simulate(SimulateArgs),
    /// Solve the stationary law over all 2^N states.
    Exact(ExactArgs),
    /// Batch-means Monte Carlo estimates of stationary functionals.
    Mc(McArgs),
    /// Stick and block niceness rates, block claims and correlations.
    Blocks(BlocksArgs),
    /// Oriented percolation on a strip.
    Percolate(PercolateArgs),
    /// Table of closed-form bounds at one (p, d).
    Formulas(FormulasArgs),
    /// Extinction threshold q0(d).
    Q0(Q0Args),
    /// 4-block niceness lower bound at window length L.
    Theta(ThetaArgs),
    /// Exact one-step Lyapunov drift and its bounds.
    Drift(DriftArgs),
    /// Longest chains, chain covers and chain checks.
    Chains(ChainsArgs),
    /// Named experiment sets.
    Preset(PresetArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Exact(_) => "exact",
            Command::Mc(_) => "mc",
            Command::Blocks(_) => "blocks",
            Command::Percolate(_) => "percolate",
            Command::Formulas(_) => "formulas",
            Command::Q0(_) => "q0",
            Command::Theta(_) => "theta",
            Command::Drift(_) => "drift",
            Command::Chains(_) => "chains",
            Command::Preset(_) => "preset",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// cycle:N, path:N, torus2d:AxB, complete:N, regular:N:d or file:PATH.
    #[arg(long)]
    pub graph: GraphSpec,
    /// Seed for random graph families.
    #[arg(long, default_value_t = 0)]
    pub graph_seed: u64,
}

impl GraphArgs {
    pub fn build(&self) -> CliResult<Graph> {
        Ok(self.graph.build(Some(self.graph_seed))?)
    }
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct ModelArgs {
    /// Probability that a resampled site becomes a one.
    #[arg(long)]
    pub p: Option<f64>,
    /// Probability that a resampled site becomes a zero (1 - p).
    #[arg(long)]
    pub q: Option<f64>,
}

impl ModelArgs {
    pub fn params(&self) -> CliResult<ModelParams> {
        Ok(match (self.p, self.q) {
            (Some(p), _) => ModelParams::new(p)?,
            (_, Some(q)) => ModelParams::from_q(q)?,
            _ => unreachable!("clap enforces one of --p/--q"),
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct SeedArgs {
    /// Master seed; falls back to BSLAB_SEED. There is no clock default.
    #[arg(long, env = "BSLAB_SEED")]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Directory for CSV artifacts and manifest.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[arg(long, default_value = "continuous")]
    pub flavor: Flavor,
    /// Time (continuous) or number of steps (embedded).
    #[arg(long)]
    pub horizon: f64,
    #[arg(long, default_value = "ring_anywhere")]
    pub rule: AllOnesRule,
    /// product, ones, zeros or an explicit bitstring.
    #[arg(long, default_value = "product")]
    pub start: String,
    /// Spacing of trajectory records (default: horizon / 100).
    #[arg(long)]
    pub record_every: Option<f64>,
    /// Replay a sampled graphical construction and write its event log.
    #[arg(long)]
    pub event_log: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "embedded")]
    pub flavor: Flavor,
    #[arg(long, default_value = "ring_anywhere")]
    pub rule: AllOnesRule,
    /// Largest number of vertices accepted.
    #[arg(long, default_value_t = bslab_core::exact::DEFAULT_BUDGET)]
    pub max_vertices: usize,
    #[arg(long, default_value_t = 1e-13)]
    pub tolerance: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[arg(long, default_value = "embedded")]
    pub flavor: Flavor,
    /// Time or steps per replica, burn-in included.
    #[arg(long)]
    pub budget: f64,
    /// Defaults to 10% of the budget.
    #[arg(long)]
    pub burn_in: Option<f64>,
    #[arg(long, default_value_t = 4)]
    pub replicas: usize,
    #[arg(long, default_value_t = 16)]
    pub batches: usize,
    #[arg(long, default_value = "ring_anywhere")]
    pub rule: AllOnesRule,
    #[arg(long, default_value = "product")]
    pub start: String,
    /// Comma-separated: marginal:x, density, proportion:a, zeros_above:k.
    #[arg(long, default_value = "marginal:0,density")]
    pub functionals: String,
    /// Also estimate the zero-count tail and its geometric fit.
    #[arg(long)]
    pub tail: bool,
    /// Compare with an exact solve (small graphs only).
    #[arg(long)]
    pub compare_exact: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BlockKind {
    Stick,
    TwoBlock,
    FourBlock,
}

#[derive(Debug, Clone, Args)]
pub struct BlocksArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[arg(long, value_enum, default_value = "two-block")]
    pub kind: BlockKind,
    /// Size of the protected set for sticks.
    #[arg(long, default_value_t = 1)]
    pub a: usize,
    /// Window length (default: the optimal length for the block kind).
    #[arg(long = "L", alias = "l")]
    pub l: Option<f64>,
    /// Degree for the analytic bound (default: maximum degree).
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    /// Also check the deterministic block claim along a chain grid.
    #[arg(long)]
    pub scan: bool,
    /// Grid correlation offset `dm,dn` for block niceness.
    #[arg(long)]
    pub correlation: Option<String>,
    /// Levels per replica for scans.
    #[arg(long, default_value_t = 64)]
    pub levels: usize,
    #[arg(long, default_value_t = 16)]
    pub replicas: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

impl BlocksArgs {
    pub fn grid_flavor(&self) -> Option<BlockFlavor> {
        match self.kind {
            BlockKind::Stick => None,
            BlockKind::TwoBlock => Some(BlockFlavor::TwoBlock),
            BlockKind::FourBlock => Some(BlockFlavor::FourBlock),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PercolateArgs {
    /// Strip width parameter N (sites 0..=2N).
    #[arg(long)]
    pub width: usize,
    /// Comma-separated bond probabilities, evaluated on shared uniforms.
    #[arg(long)]
    pub thetas: String,
    /// Height in units of N.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long)]
    pub x: Option<usize>,
    #[arg(long)]
    pub y: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub h: f64,
    /// Initial level-0 sites for the goodness estimate (default: all).
    #[arg(long)]
    pub b: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FormulasArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub d: usize,
    /// Mark the graph as not regular (flags degree-specific bounds).
    #[arg(long)]
    pub irregular: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct Q0Args {
    #[arg(long)]
    pub d: usize,
    /// Bisect in double-double arithmetic.
    #[arg(long)]
    pub precise: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ThetaArgs {
    #[arg(long = "L", alias = "l")]
    pub l: f64,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub d: usize,
}

#[derive(Debug, Clone, Args)]
pub struct DriftArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Weight of type-2 particles (default: middle of the admissible window).
    #[arg(long)]
    pub h: Option<f64>,
    /// A single configuration (bitstring) instead of the full scan.
    #[arg(long)]
    pub configuration: Option<String>,
    /// Monte Carlo steps for a spot check of a single configuration.
    #[arg(long)]
    pub mc_steps: Option<usize>,
    #[arg(long, env = "BSLAB_SEED")]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChainMode {
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, Args)]
pub struct ChainsArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, value_enum, default_value = "heuristic")]
    pub mode: ChainMode,
    #[arg(long)]
    pub anchor: Option<usize>,
    /// Cover the graph with chains of this many vertices.
    #[arg(long)]
    pub cover: Option<usize>,
    /// Check whether a comma-separated vertex list is a chain.
    #[arg(long)]
    pub check: Option<String>,
    #[arg(long, default_value_t = bslab_core::graph::DEFAULT_CHAIN_BUDGET)]
    pub budget: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum PresetName {
    Thm1Survival,
    Thm2Proportion,
    Thm3Extinction,
    ClassicEtaC,
    BlockBounds,
    PercolationSweep,
}

impl PresetName {
    pub const ALL: [PresetName; 6] = [
        PresetName::Thm1Survival,
        PresetName::Thm2Proportion,
        PresetName::Thm3Extinction,
        PresetName::ClassicEtaC,
        PresetName::BlockBounds,
        PresetName::PercolationSweep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::Thm1Survival => "thm1_survival",
            PresetName::Thm2Proportion => "thm2_proportion",
            PresetName::Thm3Extinction => "thm3_extinction",
            PresetName::ClassicEtaC => "classic_eta_c",
            PresetName::BlockBounds => "block_bounds",
            PresetName::PercolationSweep => "percolation_sweep",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PresetArgs {
    #[arg(value_enum)]
    pub name: PresetName,
    #[command(flatten)]
    pub seed: SeedArgs,
    /// Multiplier on every sampling budget.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Output directory (default: out/<preset>).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses a comma-separated list.
pub fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| crate::error::CliError::Usage(format!("bad {what} `{t}`"))))
        .collect()
}
