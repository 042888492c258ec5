use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "fhn", version, about = "Fast-slow analysis of the FitzHugh-Nagumo system")]
pub struct Cli {
    /// Output directory (created if missing)
    #[arg(long, global = true, default_value = "fhn-out")]
    pub out: PathBuf,
    /// Integration tolerance
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
    /// Worker threads (default: number of processors)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Singular limit (eps = 0): orbit composition and relaxation period
    Singular(SingularArgs),
    /// Integrate the regular system from one start
    Simulate(SimulateArgs),
    /// Equilibria and cycles along a parameter range
    Bifurcate(BifurcateArgs),
    /// Canard explosion in c with b = 0
    Canard(CanardArgs),
    /// First-order slow manifold on an attracting branch
    SlowManifold(SlowManifoldArgs),
    /// Run every entry of a TOML recipe into its own subdirectory
    Recipe(RecipeArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SingularArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub b: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub c: f64,
    #[arg(long, allow_hyphen_values = true, requires = "y0")]
    pub x0: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "x0")]
    pub y0: Option<f64>,
    /// Also write the relaxation period
    #[arg(long)]
    pub period: bool,
    /// Only compute the relaxation period
    #[arg(long, conflicts_with_all = ["x0", "y0"])]
    pub period_only: bool,
    /// Also write a sampling of the critical manifold
    #[arg(long)]
    pub manifold: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Slow,
    Fast,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub b: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub c: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub y0: f64,
    /// End time
    #[arg(long)]
    pub tmax: f64,
    /// Output spacing (default tmax / 1000)
    #[arg(long)]
    pub spacing: Option<f64>,
    #[arg(long, value_enum, default_value_t = Scale::Slow)]
    pub scale: Scale,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    B,
    C,
}

#[derive(Debug, Args, Serialize)]
pub struct BifurcateArgs {
    #[arg(long, value_enum)]
    pub param: Param,
    #[arg(long, allow_hyphen_values = true)]
    pub from: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub to: f64,
    /// Number of parameter values, endpoints included
    #[arg(long)]
    pub steps: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: f64,
    /// Value of b when sweeping c
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub b: f64,
    /// Value of c when sweeping b
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub c: f64,
    /// Also locate Hopf, pitchfork and homoclinic points
    #[arg(long)]
    pub landmarks: bool,
    /// Skip the unstable-cycle search
    #[arg(long)]
    pub no_unstable: bool,
    /// Seed every row afresh instead of from its neighbour
    #[arg(long)]
    pub cold: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct CanardArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub eps: f64,
    /// Lower bracket end (default from a coarse pre-sweep)
    #[arg(long, requires = "to")]
    pub from: Option<f64>,
    /// Upper bracket end
    #[arg(long, requires = "from")]
    pub to: Option<f64>,
    /// Number of classified cycles around the explosion
    #[arg(long, default_value_t = 40)]
    pub points: usize,
    /// Also locate the end of the small unstable family in b (c = 0)
    #[arg(long)]
    pub b_locus: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchArg {
    Left,
    Right,
}

#[derive(Debug, Args, Serialize)]
pub struct SlowManifoldArgs {
    #[arg(long, value_enum)]
    pub branch: BranchArg,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub b: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub c: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub y_from: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub y_to: Option<f64>,
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    /// Extra ordinates to evaluate, repeatable
    #[arg(long = "at", allow_hyphen_values = true)]
    pub at: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct RecipeArgs {
    pub file: PathBuf,
}
