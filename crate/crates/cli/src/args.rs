//! Command-line surface. Flags override the configuration file; every
//! subcommand reads its parameters from `--config`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use motor_core::dynamics::Mode;

use crate::config::{Axis, Overrides};

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "qmd" => Ok(Mode::Qmd),
        "md" => Ok(Mode::Md),
        other => Err(format!("expected qmd or md, got {other}")),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "motor",
    version = concat!(env!("CARGO_PKG_VERSION"), " (", env!("GIT_DESCRIBE"), ")"),
    about = "Two-particle autonomous thermal motor: exact velocity quadrature \
             and colored-noise Langevin simulation",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Steady-state velocity of the unloaded motor (second-order quadrature)
    Exact(QuadArgs),
    /// Motor velocity under external loads f1, f2 (drift + second order)
    Forced(QuadArgs),
    /// Drift of one particle in a tilted periodic lattice
    Single(QuadArgs),
    /// Langevin ensemble run: quantum colored noise (qmd) or classical (md)
    Simulate(SimulateArgs),
    /// Quadrature velocity against one swept parameter
    Sweep(SweepArgs),
    /// Synthesize bath noise and verify its periodogram against the target
    NoiseCheck(NoiseCheckArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML configuration file
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output CSV path (stdout when omitted)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QuadArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Kernel-integral relative tolerance override
    #[arg(long, value_name = "X")]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Swept parameter (overrides [sweep] axis)
    #[arg(long, value_name = "NAME")]
    pub axis: Option<Axis>,
    #[arg(long, value_name = "X")]
    pub min: Option<f64>,
    #[arg(long, value_name = "X")]
    pub max: Option<f64>,
    #[arg(long, value_name = "N")]
    pub points: Option<usize>,
    /// Geometric spacing (pass `--log false` to force linear)
    #[arg(long, value_name = "BOOL", num_args = 0..=1, default_missing_value = "true")]
    pub log: Option<bool>,
    /// Kernel-integral relative tolerance override
    #[arg(long, value_name = "X")]
    pub tol: Option<f64>,
    /// Worker threads (default: one per CPU)
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// qmd (quantum colored noise) or md (classical white noise)
    #[arg(long, value_name = "MODE", value_parser = parse_mode)]
    pub mode: Option<Mode>,
    /// Trajectories in the ensemble
    #[arg(long, value_name = "N")]
    pub traj: Option<usize>,
    /// Steps per trajectory (power of two ≥ 1024)
    #[arg(long, value_name = "N")]
    pub steps: Option<usize>,
    /// Time step (default: automatic, from the stability rule)
    #[arg(long, value_name = "X")]
    pub dt: Option<f64>,
    /// Master seed for the deterministic per-trajectory noise
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Swept parameter: one ensemble per point (overrides [sweep] axis)
    #[arg(long, value_name = "NAME")]
    pub axis: Option<Axis>,
    #[arg(long, value_name = "X")]
    pub min: Option<f64>,
    #[arg(long, value_name = "X")]
    pub max: Option<f64>,
    #[arg(long, value_name = "N")]
    pub points: Option<usize>,
    /// Geometric spacing (pass `--log false` to force linear)
    #[arg(long, value_name = "BOOL", num_args = 0..=1, default_missing_value = "true")]
    pub log: Option<bool>,
    /// Worker threads (default: one per CPU)
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct NoiseCheckArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// qmd (quantum spectrum) or md (classical white spectrum)
    #[arg(long, value_name = "MODE", value_parser = parse_mode)]
    pub mode: Option<Mode>,
    /// Track length in samples (power of two ≥ 1024)
    #[arg(long, value_name = "N")]
    pub steps: Option<usize>,
    /// Sample spacing (default: automatic, from the stability rule)
    #[arg(long, value_name = "X")]
    pub dt: Option<f64>,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Periodogram bins (≥ 8)
    #[arg(long, value_name = "N")]
    pub bins: Option<usize>,
    /// Largest acceptable |relative periodogram deviation|
    #[arg(long, value_name = "X")]
    pub tol: Option<f64>,
}

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Exact(a) | Command::Forced(a) | Command::Single(a) => &a.common,
            Command::Simulate(a) => &a.common,
            Command::Sweep(a) => &a.common,
            Command::NoiseCheck(a) => &a.common,
        }
    }

    pub fn overrides(&self) -> Overrides {
        match self {
            Command::Exact(a) | Command::Forced(a) | Command::Single(a) => Overrides {
                tol: a.tol,
                ..Overrides::default()
            },
            Command::Sweep(a) => Overrides {
                tol: a.tol,
                axis: a.axis,
                min: a.min,
                max: a.max,
                points: a.points,
                log: a.log,
                ..Overrides::default()
            },
            Command::Simulate(a) => Overrides {
                mode: a.mode,
                traj: a.traj,
                steps: a.steps,
                dt: a.dt,
                seed: a.seed,
                axis: a.axis,
                min: a.min,
                max: a.max,
                points: a.points,
                log: a.log,
                ..Overrides::default()
            },
            Command::NoiseCheck(a) => Overrides {
                mode: a.mode,
                steps: a.steps,
                dt: a.dt,
                seed: a.seed,
                bins: a.bins,
                tol: a.tol,
                ..Overrides::default()
            },
        }
    }
}
