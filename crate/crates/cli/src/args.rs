use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "rovib",
    version,
    about = "Eckart frame, internal observables and quantum consistency checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Eckart conditions and inertia symmetry of the mode basis
    Validate,
    /// Mode vectors, duals and frequencies
    Modes,
    /// Eckart frame and internal state of every trajectory frame
    Frame,
    /// Rotational / deformation / electronic split of the angular momentum
    Decompose,
    /// Dispersion products against their uncertainty bounds
    Heisenberg,
    /// Finite-difference residuals of the canonical commutators
    Commutators,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Modes => "modes",
            Command::Frame => "frame",
            Command::Decompose => "decompose",
            Command::Heisenberg => "heisenberg",
            Command::Commutators => "commutators",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Options {
    /// Molecule specification (JSON)
    #[arg(long, global = true, value_name = "PATH")]
    pub input: Option<PathBuf>,

    /// Trajectory frames (XYZ with momenta)
    #[arg(long, global = true, value_name = "PATH")]
    pub trajectory: Option<PathBuf>,

    /// Report destination; stdout when absent
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Relative tolerance on Eckart residuals
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol_eckart: f64,

    /// Tolerance on configuration round trips and decomposition sums
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol_roundtrip: f64,

    /// Slack on uncertainty products, in units of ħ
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol_quad: f64,

    /// Points of the line grid
    #[arg(long, global = true, default_value_t = 24001)]
    pub grid_line: usize,

    /// Half-width of the line grid
    #[arg(long, global = true, default_value_t = 12.0)]
    pub line_extent: f64,

    /// Radial nodes of the orientation grid
    #[arg(long, global = true, default_value_t = 96)]
    pub grid_theta: usize,

    /// Direction nodes of the orientation grid (lower bound)
    #[arg(long, global = true, default_value_t = 512)]
    pub grid_dirs: usize,

    /// Override the molecule's ħ
    #[arg(long, global = true)]
    pub hbar: Option<f64>,

    /// Seed for generated modes and random states
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Random states per kind in `heisenberg`
    #[arg(long, global = true, default_value_t = 50)]
    pub random: usize,

    /// Use angular momentum projected on the identity frame instead of the moving frame
    #[arg(long, global = true)]
    pub fixed_frame: bool,
}

impl Options {
    pub fn check(&self) -> Result<(), String> {
        for (name, v) in [
            ("--tol-eckart", self.tol_eckart),
            ("--tol-roundtrip", self.tol_roundtrip),
            ("--tol-quad", self.tol_quad),
            ("--line-extent", self.line_extent),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if let Some(h) = self.hbar {
            if h <= 0.0 || !h.is_finite() {
                return Err(format!("--hbar must be positive, got {h}"));
            }
        }
        Ok(())
    }
}
