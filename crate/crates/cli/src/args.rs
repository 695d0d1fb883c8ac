//! Command-line flags and their JSON config mirror.
//!
//! Every subcommand's flags are optional at parse time so that a `--config`
//! file can supply them. Flags given on the command line override the file;
//! anything still missing falls back to the documented defaults in
//! [`crate::commands`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use efl_core::CurvatureSign;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "efl", version, about = "Homogeneous Einstein-flow simulations on warped products")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one trajectory and write it as CSV.
    Simulate(SimulateArgs),
    /// Decide CompleteWithinHorizon vs Recollapse for one parameter.
    Classify(ClassifyArgs),
    /// Bisect a recollapse threshold in s.
    Bisect(BisectArgs),
    /// Classify (and extract limits) over a grid of s.
    Sweep(SweepArgs),
    /// Audit the reduced Hamiltonian along one trajectory.
    Hamiltonian(HamiltonianArgs),
    /// Closed-form background quantities at one time.
    Background(BackgroundArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Classify(_) => "classify",
            Command::Bisect(_) => "bisect",
            Command::Sweep(_) => "sweep",
            Command::Hamiltonian(_) => "hamiltonian",
            Command::Background(_) => "background",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigFile {
    /// JSON file whose keys mirror the long flag names; flags win.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SimulateArgs {
    /// Spatial dimension (even, at least 2).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    /// Sign of the Einstein constant of the factors.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curvature: Option<CurvatureSign>,
    /// Volume of the first base factor.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vol_m: Option<f64>,
    /// Volume of the second base factor.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vol_n: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dt: Option<f64>,
    /// CSV destination; the run document goes to PATH.manifest.json.
    #[arg(long, value_name = "PATH")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_step: Option<f64>,
    /// Blow-up floor on min(x, y).
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_floor: Option<f64>,
    /// Blow-up floor on x' + y'.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub velocity_floor: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub config: ConfigFile,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ClassifyArgs {
    /// Spatial dimension (even, at least 2).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    /// Sign of the Einstein constant of the factors.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curvature: Option<CurvatureSign>,
    /// Volume of the first base factor.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vol_m: Option<f64>,
    /// Volume of the second base factor.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vol_n: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub config: ConfigFile,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct BisectArgs {
    /// Spatial dimension (even, at least 2).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    /// Sign of the Einstein constant of the factors.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curvature: Option<CurvatureSign>,
    /// Volume of the first base factor.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vol_m: Option<f64>,
    /// Volume of the second base factor.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vol_n: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub config: ConfigFile,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SweepArgs {
    /// Spatial dimension (even, at least 2).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    /// Sign of the Einstein constant of the factors.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curvature: Option<CurvatureSign>,
    /// Volume of the first base factor.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vol_m: Option<f64>,
    /// Volume of the second base factor.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vol_n: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_min: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_max: Option<f64>,
    /// Number of evenly spaced grid points, endpoints included.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<u32>,
    /// Explicit comma-separated grid; replaces --s-min/--s-max/--steps.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub config: ConfigFile,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct HamiltonianArgs {
    /// Spatial dimension (even, at least 2).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    /// Sign of the Einstein constant of the factors.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curvature: Option<CurvatureSign>,
    /// Volume of the first base factor.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vol_m: Option<f64>,
    /// Volume of the second base factor.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vol_n: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub config: ConfigFile,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct BackgroundArgs {
    /// Spatial dimension (at least 2).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curvature: Option<CurvatureSign>,
    /// Proper time on the background.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub config: ConfigFile,
}
