//! Command-line front end for the thermal-motor library: configuration
//! files with physical- or reduced-unit parameters, flag overrides,
//! quadrature and Langevin-ensemble runs, parameter sweeps, a noise
//! self-check, and self-describing CSV output.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

pub mod args;
pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod units;

pub use config::{Axis, CommandKind, Overrides, RunConfig};
pub use error::CliError;
