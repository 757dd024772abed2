use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "tilepile", version, about = "Abelian sandpiles on periodic tilings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate tiling specs and build finite graphs.
    #[command(subcommand)]
    Tiling(TilingCmd),
    /// Sandpile group operations on a finite graph.
    #[command(subcommand)]
    Sandpile(SandpileCmd),
    /// Green's function convolution on a torus or the infinite tiling.
    Greens(GreensArgs),
    /// Spectral parameters by bounded prevector search.
    Gamma(GammaArgs),
    /// Mixing profiles: exact L², Monte Carlo, cut-off scans.
    #[command(subcommand)]
    Mixing(MixingCmd),
    /// Compare computed spectral values with published ones.
    #[command(subcommand)]
    Reproduce(ReproduceCmd),
}

#[derive(Subcommand, Debug)]
pub enum TilingCmd {
    /// Check a spec and its reflection family.
    Validate {
        /// Spec file, or a built-in name.
        spec: String,
    },
    /// Build a torus or open-boundary graph and print a summary.
    Build {
        spec: String,
        #[arg(long, conflicts_with = "open", required_unless_present = "open")]
        torus: Option<usize>,
        #[arg(long)]
        open: Option<usize>,
        /// Write the edge list here as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
pub struct GraphArg {
    /// `<spec>:<torus|open>:<m>`, spec being a file or a built-in name.
    #[arg(long)]
    pub graph: String,
}

#[derive(Subcommand, Debug)]
pub enum SandpileCmd {
    Identity(GraphArg),
    Stabilize {
        #[command(flatten)]
        graph: GraphArg,
        /// Flat JSON array of chip counts, or `@file`.
        #[arg(long)]
        config: String,
    },
    Order(GraphArg),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct GreensArgs {
    #[arg(long)]
    pub spec: String,
    /// Torus size; omit with `--radius` for the infinite tiling.
    #[arg(long)]
    pub m: Option<usize>,
    /// JSON list of `[cell, [lattice coords], value]`.
    #[arg(long)]
    pub eta: String,
    /// Ball radius for the infinite-tiling table.
    #[arg(long)]
    pub radius: Option<usize>,
    /// Derivative multi-index, comma separated.
    #[arg(long)]
    pub deriv: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct GammaArgs {
    #[arg(long)]
    pub spec: String,
    /// Reflection family JSON; defaults to the spec's own.
    #[arg(long)]
    pub family: Option<PathBuf>,
    /// Codimension; omitted means `γ`/`γ_0` only, `all` means every `j`.
    #[arg(long)]
    pub j: Option<String>,
    #[arg(long = "B", alias = "b", default_value_t = 4)]
    pub b: i64,
    #[arg(long = "R0", alias = "r0", default_value_t = 2)]
    pub r0: usize,
    #[arg(long)]
    pub precision: Option<f64>,
    /// Torus ladder, comma separated.
    #[arg(long)]
    pub levels: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MixingCommon {
    #[command(flatten)]
    pub graph: GraphArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Subcommand, Debug)]
pub enum MixingCmd {
    /// Exact L² and TV bounds from the dual group.
    L2 {
        #[command(flatten)]
        common: MixingCommon,
        /// `a,b,c` or `start:stop:step`.
        #[arg(long)]
        steps: String,
        #[arg(long, default_value_t = 10_000_000)]
        cap: u64,
    },
    /// Monte Carlo chains from the full configuration.
    Mc {
        #[command(flatten)]
        common: MixingCommon,
        #[arg(long)]
        steps: String,
        #[arg(long, default_value_t = 200)]
        chains: usize,
        /// Prevector JSON `[[cell, [lat], coef], ...]` for the observable.
        #[arg(long)]
        nu: Option<String>,
    },
    /// Cut-off scan over graph sizes; `--graph spec:torus:8,16,32`.
    Cutoff {
        #[command(flatten)]
        common: MixingCommon,
        #[arg(long, default_value_t = 400)]
        chains: usize,
        #[arg(long)]
        nu: Option<String>,
        /// Override the spectral factor `Γ`.
        #[arg(long)]
        big_gamma: Option<f64>,
    },
}

#[derive(Subcommand, Debug)]
pub enum ReproduceCmd {
    /// `γ` for the triangular, hexagonal and fcc tilings.
    Periodic {
        /// Override every absolute tolerance.
        #[arg(long)]
        precision: Option<f64>,
    },
    /// The `D4` table of `γ_j` and `Γ_j`.
    D4,
}
