//! Run configuration: TOML file schema, flag overrides, and the fully
//! resolved, self-describing `RunConfig` that output headers record.

use std::path::Path;

use serde::{Deserialize, Serialize};

use motor_core::bath::{BathSpec, MotorParams};
use motor_core::dynamics::{InitialConditions, Mode, SimSystem};
use motor_core::velocity::QuadratureSettings;

use crate::error::{CliError, Result};
use crate::units::{PhysicalParams, ReducedParams};

/// Which unit system the `[params]` table is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum UnitSystem {
    #[default]
    Reduced,
    Physical,
}

/// What is being driven: the two-particle motor or a single tilted-lattice
/// particle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    #[default]
    Motor,
    Single,
}

/// The executed subcommand, recorded in output headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Exact,
    Forced,
    Single,
    Simulate,
    Sweep,
    NoiseCheck,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Exact => "exact",
            CommandKind::Forced => "forced",
            CommandKind::Single => "single",
            CommandKind::Simulate => "simulate",
            CommandKind::Sweep => "sweep",
            CommandKind::NoiseCheck => "noise-check",
        }
    }
}

/// External loads: `f1`/`f2` act on the motor particles, `f` tilts the
/// single-particle lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ForcesSection {
    pub f1: f64,
    pub f2: f64,
    pub f: f64,
}

fn default_steps() -> usize {
    1 << 18
}

fn default_traj() -> usize {
    512
}

fn default_seed() -> u64 {
    12345
}

fn default_mode() -> Mode {
    Mode::Qmd
}

fn default_window() -> f64 {
    0.5
}

/// Ensemble-simulation settings. `dt = None` means "choose automatically":
/// each simulated system uses `suggested_dt()`, which stays well inside the
/// integrator's stability bound even as a sweep changes the stiffness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub dt: Option<f64>,
    /// Steps per trajectory; a power of two ≥ 1024.
    pub steps: usize,
    pub traj: usize,
    pub seed: u64,
    pub mode: Mode,
    /// Trailing fraction of each trajectory used by the estimators.
    pub window: f64,
    pub initial: InitialConditions,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            dt: None,
            steps: default_steps(),
            traj: default_traj(),
            seed: default_seed(),
            mode: default_mode(),
            window: default_window(),
            initial: InitialConditions::Origin,
        }
    }
}

/// One swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Spring constant `k` (reduced).
    #[value(name = "k")]
    K,
    /// Interaction frequency `Ω = √(k/m)` (reduced, or cyclic kHz).
    #[value(name = "omega")]
    Omega,
    /// Lattice wavenumber (reduced, or μm⁻¹).
    #[value(name = "b")]
    B,
    /// Temperature scale θ: `T1 = θ`, with `T2` and `V0` scaled along at
    /// their base-configuration ratios.
    #[value(name = "theta")]
    Theta,
    /// Friction coefficient as the damping rate `η₀/m` in Hz
    /// (physical-units configurations only).
    #[value(name = "eta0")]
    Eta0,
    /// Lattice depth (reduced).
    #[value(name = "v0")]
    V0,
    /// External load: equal forces on both motor particles, or the
    /// single-particle tilt.
    #[value(name = "f")]
    F,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::K => "k",
            Axis::Omega => "omega",
            Axis::B => "b",
            Axis::Theta => "theta",
            Axis::Eta0 => "eta0",
            Axis::V0 => "v0",
            Axis::F => "f",
        }
    }
}

/// Sweep axis specification: `points` values spanning `[min, max]`,
/// linearly or geometrically spaced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: Axis,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default)]
    pub log: bool,
}

impl SweepSection {
    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(CliError::Config(format!(
                "[sweep] needs finite min < max, got [{}, {}]",
                self.min, self.max
            )));
        }
        if self.points < 2 {
            return Err(CliError::Config(format!(
                "[sweep] needs at least 2 points, got {}",
                self.points
            )));
        }
        if self.log && self.min <= 0.0 {
            return Err(CliError::Config(format!(
                "[sweep] log spacing needs min > 0, got {}",
                self.min
            )));
        }
        let lower_bound = match self.axis {
            // the base scales and the motor itself need these positive
            Axis::B | Axis::Theta | Axis::Eta0 => Some(0.0_f64),
            // exact zero is a valid (if trivial) point for these
            Axis::K | Axis::Omega | Axis::V0 => None,
            Axis::F => None,
        };
        if let Some(bound) = lower_bound {
            if self.min <= bound {
                return Err(CliError::Config(format!(
                    "[sweep] axis {} needs min > {}, got {}",
                    self.axis.name(),
                    bound,
                    self.min
                )));
            }
        }
        if matches!(self.axis, Axis::K | Axis::Omega | Axis::V0) && self.min < 0.0 {
            return Err(CliError::Config(format!(
                "[sweep] axis {} needs min >= 0, got {}",
                self.axis.name(),
                self.min
            )));
        }
        Ok(())
    }

    /// The sweep grid, with both endpoints exact.
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| {
                if i == 0 {
                    return self.min;
                }
                if i == n - 1 {
                    return self.max;
                }
                let t = i as f64 / (n - 1) as f64;
                if self.log {
                    self.min * (self.max / self.min).powf(t)
                } else {
                    self.min + (self.max - self.min) * t
                }
            })
            .collect()
    }
}

/// Quadrature accuracy knobs, in recordable form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub kernel_rel_tol: f64,
    pub grid_scale: f64,
    pub tau_max: Option<f64>,
    pub n_points: Option<usize>,
    pub max_tail_fraction: f64,
}

impl From<QuadratureSettings> for QuadSpec {
    fn from(s: QuadratureSettings) -> Self {
        QuadSpec {
            kernel_rel_tol: s.kernel_rel_tol,
            grid_scale: s.grid_scale,
            tau_max: s.tau_max,
            n_points: s.n_points,
            max_tail_fraction: s.max_tail_fraction,
        }
    }
}

impl QuadSpec {
    pub fn settings(&self) -> QuadratureSettings {
        QuadratureSettings {
            kernel_rel_tol: self.kernel_rel_tol,
            grid_scale: self.grid_scale,
            tau_max: self.tau_max,
            n_points: self.n_points,
            max_tail_fraction: self.max_tail_fraction,
        }
    }
}

/// The `[params]` table in either unit system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "units", rename_all = "lowercase")]
pub enum ParamsSpec {
    Reduced(ReducedParams),
    Physical(PhysicalParams),
}

impl ParamsSpec {
    /// The reduced-unit view (converted if necessary).
    pub fn reduced(&self) -> ReducedParams {
        match self {
            ParamsSpec::Reduced(r) => *r,
            ParamsSpec::Physical(p) => p.to_reduced(),
        }
    }

    pub fn is_physical(&self) -> bool {
        matches!(self, ParamsSpec::Physical(_))
    }
}

/// Raw file schema (what `toml::from_str` sees).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    units: UnitSystem,
    #[serde(default)]
    system: SystemKind,
    params: toml::Value,
    #[serde(default)]
    forces: ForcesSection,
    #[serde(default)]
    sim: SimSection,
    #[serde(default)]
    sweep: Option<SweepSection>,
}

/// Command-line overrides; every `Some` wins over the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub traj: Option<usize>,
    pub steps: Option<usize>,
    pub dt: Option<f64>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub bins: Option<usize>,
    pub axis: Option<Axis>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub points: Option<usize>,
    pub log: Option<bool>,
}

fn default_bins() -> usize {
    16
}

fn default_check_tol() -> f64 {
    0.10
}

/// Fully resolved run: everything needed to reproduce the output
/// bit-for-bit (worker count excluded on purpose — it cannot change
/// results, only wall time).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub system: SystemKind,
    pub params: ParamsSpec,
    #[serde(default)]
    pub forces: ForcesSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    pub quad: QuadSpec,
    /// Periodogram bins for `noise-check`.
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Acceptance threshold on the periodogram deviation for `noise-check`.
    #[serde(default = "default_check_tol")]
    pub check_tol: f64,
}

impl RunConfig {
    /// Parse a TOML file and merge the flag overrides.
    pub fn load(command: CommandKind, path: &Path, ov: &Overrides) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let file: FileConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        RunConfig::resolve(command, file, ov)
    }

    /// Same, from a TOML string (used by tests).
    pub fn from_toml(command: CommandKind, text: &str, ov: &Overrides) -> Result<RunConfig> {
        let file: FileConfig =
            toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        RunConfig::resolve(command, file, ov)
    }

    fn resolve(command: CommandKind, file: FileConfig, ov: &Overrides) -> Result<RunConfig> {
        let params = match file.units {
            UnitSystem::Reduced => {
                let r: ReducedParams = file
                    .params
                    .try_into()
                    .map_err(|e| CliError::Config(format!("[params] (reduced units): {e}")))?;
                r.validate()?;
                ParamsSpec::Reduced(r)
            }
            UnitSystem::Physical => {
                let p: PhysicalParams = file
                    .params
                    .try_into()
                    .map_err(|e| CliError::Config(format!("[params] (physical units): {e}")))?;
                p.validate()?;
                ParamsSpec::Physical(p)
            }
        };

        let mut sim = file.sim;
        if let Some(mode) = ov.mode {
            sim.mode = mode;
        }
        if let Some(traj) = ov.traj {
            sim.traj = traj;
        }
        if let Some(steps) = ov.steps {
            sim.steps = steps;
        }
        if let Some(dt) = ov.dt {
            sim.dt = Some(dt);
        }
        if let Some(seed) = ov.seed {
            sim.seed = seed;
        }

        let sweep = merge_sweep(file.sweep, ov)?;
        let uses_sweep = matches!(command, CommandKind::Sweep | CommandKind::Simulate);
        let sweep = if uses_sweep { sweep } else { None };
        if command == CommandKind::Sweep && sweep.is_none() {
            return Err(CliError::Config(
                "sweep needs an axis: add a [sweep] table or pass --axis/--min/--max/--points"
                    .into(),
            ));
        }
        if let Some(sw) = &sweep {
            sw.validate()?;
        }

        let mut quad = QuadSpec::from(match command {
            CommandKind::Sweep => QuadratureSettings::fast(),
            _ => QuadratureSettings::default(),
        });
        let mut check_tol = default_check_tol();
        if let Some(tol) = ov.tol {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(CliError::Config(format!(
                    "--tol must be positive and finite, got {tol}"
                )));
            }
            if command == CommandKind::NoiseCheck {
                check_tol = tol;
            } else {
                quad.kernel_rel_tol = tol;
            }
        }

        let mut bins = default_bins();
        if let Some(b) = ov.bins {
            bins = b;
        }

        let cfg = RunConfig {
            command,
            system: file.system,
            params,
            forces: file.forces,
            sim,
            sweep,
            quad,
            bins,
            check_tol,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Cross-field rules that depend on the command.
    fn validate(&self) -> Result<()> {
        let physical = self.params.is_physical();

        if physical && self.system == SystemKind::Single {
            return Err(CliError::Config(
                "single-particle systems are defined in reduced units only; \
                 set units = \"reduced\""
                    .into(),
            ));
        }
        if physical && self.command == CommandKind::Simulate {
            return Err(CliError::Config(
                "simulate works on reduced-unit configurations only (laboratory-scale \
                 parameters put the stable time step ~10⁷ below the relaxation time); \
                 convert with the documented base scales or use the quadrature commands"
                    .into(),
            ));
        }

        if self.command == CommandKind::Exact && (self.forces.f1 != 0.0 || self.forces.f2 != 0.0)
        {
            return Err(CliError::Config(
                "exact computes the unloaded steady state but [forces] are nonzero; \
                 use the forced command"
                    .into(),
            ));
        }

        if let Some(sw) = &self.sweep {
            let allowed: &[Axis] = match (physical, self.system) {
                (true, SystemKind::Motor) => &[Axis::Omega, Axis::B, Axis::Theta, Axis::Eta0],
                (false, SystemKind::Motor) => {
                    &[Axis::K, Axis::Omega, Axis::B, Axis::Theta, Axis::V0, Axis::F]
                }
                (false, SystemKind::Single) => &[Axis::B, Axis::Theta, Axis::V0, Axis::F],
                (true, SystemKind::Single) => unreachable!("rejected above"),
            };
            if !allowed.contains(&sw.axis) {
                let names: Vec<&str> = allowed.iter().map(|a| a.name()).collect();
                let hint = if sw.axis == Axis::Eta0 && !physical {
                    "; the friction sets the reduced time unit, so eta0 sweeps need a \
                     physical-units configuration"
                } else {
                    ""
                };
                return Err(CliError::Config(format!(
                    "axis {} is not available for {} {}-unit runs (available: {}){}",
                    sw.axis.name(),
                    match self.system {
                        SystemKind::Motor => "motor",
                        SystemKind::Single => "single-particle",
                    },
                    if physical { "physical" } else { "reduced" },
                    names.join(", "),
                    hint
                )));
            }
            if sw.axis == Axis::Theta && self.base_theta() <= 0.0 {
                return Err(CliError::Config(
                    "theta sweeps scale T2 and V0 at their base ratios, which needs a \
                     positive base T1"
                        .into(),
                ));
            }
        }

        if let Some(dt) = self.sim.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(CliError::Config(format!(
                    "[sim] dt must be positive and finite, got {dt}"
                )));
            }
        }
        if !(self.check_tol.is_finite() && self.check_tol > 0.0) {
            return Err(CliError::Config(format!(
                "noise-check tolerance must be positive, got {}",
                self.check_tol
            )));
        }
        Ok(())
    }

    fn base_theta(&self) -> f64 {
        match &self.params {
            ParamsSpec::Reduced(r) => r.t1,
            ParamsSpec::Physical(p) => p.t1_uk,
        }
    }

    /// Reduced parameter set with the sweep axis applied at value `x`.
    /// Returns the parameters together with possibly rescaled forces.
    pub fn at_axis(&self, axis: Axis, x: f64) -> Result<(ParamsSpec, ForcesSection)> {
        let mut forces = self.forces;
        let params = match &self.params {
            ParamsSpec::Physical(p) => {
                let mut p = *p;
                match axis {
                    Axis::Omega => p.omega_khz = x,
                    Axis::B => p.b_per_um = x,
                    Axis::Eta0 => p.eta0_over_m_hz = x,
                    Axis::Theta => {
                        let scale = x / p.t1_uk;
                        p.t2_uk *= scale;
                        p.v0_uk *= scale;
                        p.t1_uk = x;
                    }
                    other => {
                        return Err(CliError::Config(format!(
                            "axis {} is not available in physical units",
                            other.name()
                        )))
                    }
                }
                ParamsSpec::Physical(p)
            }
            ParamsSpec::Reduced(r) => {
                let mut r = *r;
                match axis {
                    Axis::K => r.k = x,
                    Axis::Omega => r.k = r.m * x * x,
                    Axis::B => r.b = x,
                    Axis::V0 => r.v0 = x,
                    Axis::Theta => {
                        let scale = x / r.t1;
                        r.t2 = Some(r.t2() * scale);
                        r.v0 *= scale;
                        r.t1 = x;
                    }
                    Axis::F => {
                        forces.f1 = x;
                        forces.f2 = x;
                        forces.f = x;
                    }
                    Axis::Eta0 => {
                        return Err(CliError::Config(
                            "axis eta0 needs a physical-units configuration (η₀ is the \
                             friction unit in reduced units)"
                                .into(),
                        ))
                    }
                }
                ParamsSpec::Reduced(r)
            }
        };
        Ok((params, forces))
    }

    /// Build the two-particle system in reduced units.
    pub fn motor_params_of(&self, params: &ParamsSpec) -> Result<MotorParams> {
        let r = params.reduced();
        let cutoff = r.cutoff.to_kind();
        let bath1 = BathSpec::new(r.eta0, cutoff, r.t1, r.hbar)?;
        let bath2 = BathSpec::new(r.eta0, cutoff, r.t2(), r.hbar)?;
        Ok(MotorParams::new(r.m, r.k, r.b, r.v0, r.phi, bath1, bath2)?)
    }

    /// Build the single-particle system `(bath, m, b, v0)` in reduced units.
    pub fn single_parts_of(&self, params: &ParamsSpec) -> Result<(BathSpec, f64, f64, f64)> {
        let r = params.reduced();
        let bath = BathSpec::new(r.eta0, r.cutoff.to_kind(), r.t1, r.hbar)?;
        Ok((bath, r.m, r.b, r.v0))
    }

    /// The simulated system for the given parameter point.
    pub fn sim_system_of(&self, params: &ParamsSpec, forces: &ForcesSection) -> Result<SimSystem> {
        Ok(match self.system {
            SystemKind::Motor => SimSystem::Motor {
                params: self.motor_params_of(params)?,
                forces: motor_core::velocity::ForceSpec {
                    f1: forces.f1,
                    f2: forces.f2,
                },
            },
            SystemKind::Single => {
                let (bath, m, b, v0) = self.single_parts_of(params)?;
                SimSystem::Single {
                    bath,
                    m,
                    b,
                    v0,
                    force: forces.f,
                }
            }
        })
    }
}

fn merge_sweep(file: Option<SweepSection>, ov: &Overrides) -> Result<Option<SweepSection>> {
    let any_flag = ov.axis.is_some()
        || ov.min.is_some()
        || ov.max.is_some()
        || ov.points.is_some()
        || ov.log.is_some();
    match file {
        Some(mut sw) => {
            if let Some(axis) = ov.axis {
                sw.axis = axis;
            }
            if let Some(min) = ov.min {
                sw.min = min;
            }
            if let Some(max) = ov.max {
                sw.max = max;
            }
            if let Some(points) = ov.points {
                sw.points = points;
            }
            if let Some(log) = ov.log {
                sw.log = log;
            }
            Ok(Some(sw))
        }
        None if any_flag => {
            let (Some(axis), Some(min), Some(max), Some(points)) =
                (ov.axis, ov.min, ov.max, ov.points)
            else {
                return Err(CliError::Config(
                    "a sweep given by flags needs all of --axis, --min, --max, --points".into(),
                ));
            };
            Ok(Some(SweepSection {
                axis,
                min,
                max,
                points,
                log: ov.log.unwrap_or(false),
            }))
        }
        None => Ok(None),
    }
}
