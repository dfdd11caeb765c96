//! Command-line definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::angle::Angle;

#[derive(Debug, Parser)]
#[command(name = "qpv", version, about = "Attacks on QPV_θ: searches, sweeps and checks")]
pub struct Cli {
    /// Worker threads (0 = one per CPU). Never changes results.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Write the CSV/JSON body here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON-lines solution store; verified on load, appended on success.
    #[arg(long, global = true)]
    pub store: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize p_err over a θ grid on [0, π/4] and write CSV.
    Sweep(SweepArgs),
    /// Least-squares search for an exact attack at one angle.
    Exact(ExactArgs),
    /// Exact search at every angle nπ/k for the given k.
    Classify(ClassifyArgs),
    /// Check a built-in explicit solution or a store record.
    Verify(VerifyArgs),
    /// Support-hypergraph enumeration and the no-go scan.
    Graphs(GraphsArgs),
    /// Nonlocal KAK parameters of the two-qubit gate U_θ.
    Kak(KakArgs),
    /// Minimize p_err for the n-basis protocol.
    Multibase(MultibaseArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Real,
    Complex,
}

impl ModeArg {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Real => "real",
            Self::Complex => "complex",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Cayley,
    Exp,
}

#[derive(Debug, Clone, Args)]
pub struct ApproxArgs {
    /// Restarts per point (default 1000 for d ≤ 2, 10⁴ for d = 3, 10⁵ above).
    #[arg(long)]
    pub restarts: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Real)]
    pub mode: ModeArg,
    /// Manifold parametrization.
    #[arg(long, value_enum, default_value_t = KindArg::Cayley)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub d: usize,
    /// Number of evenly spaced angles on [0, π/4].
    #[arg(long, default_value_t = 65)]
    pub grid: usize,
    /// Also descend from the previous grid point's optimum.
    #[arg(long)]
    pub warm_start: bool,
    #[command(flatten)]
    pub approx: ApproxArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ExactSearchArgs {
    #[arg(long, default_value_t = 1000)]
    pub restarts: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Real)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// Residual below which a candidate counts as exact.
    #[arg(long, default_value_t = 1e-18)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ExactArgs {
    #[arg(long)]
    pub d: usize,
    /// Angle as Npi/K or radians.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Angle,
    #[command(flatten)]
    pub search: ExactSearchArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub d: usize,
    /// Denominators k, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<u64>,
    #[command(flatten)]
    pub search: ExactSearchArgs,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct VerifyArgs {
    /// d4-first, d4-second, d6 or all.
    #[arg(long)]
    pub name: Option<String>,
    /// Id of a record in --store.
    #[arg(long)]
    pub store_record: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct GraphsArgs {
    #[arg(long)]
    pub d: usize,
    /// Only count configurations obeying rules I–IV (required for d = 4).
    #[arg(long)]
    pub enumerate_only: bool,
}

#[derive(Debug, Clone, Args)]
pub struct KakArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Angle,
}

#[derive(Debug, Clone, Args)]
pub struct MultibaseArgs {
    #[arg(long)]
    pub d: usize,
    /// Number of bases.
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub approx: ApproxArgs,
}
