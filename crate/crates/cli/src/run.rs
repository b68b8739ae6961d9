//! Command execution: quadrature evaluations, parameter sweeps, Langevin
//! ensembles, and the noise self-check, each rendered to a `Report`.

use rayon::prelude::*;

use motor_core::bath::{symmetric_psd, BathSpec};
use motor_core::colored_noise::{derive_track_seed, periodogram_check, synthesize};
use motor_core::dynamics::{run_ensemble, EnsembleResult, Mode, SimConfig};
use motor_core::velocity::{
    forced_velocity_with, single_particle_velocity_with, steady_velocity_with, ForceSpec,
    VelocityEstimate,
};

use crate::args::{Cli, Command};
use crate::config::{Axis, CommandKind, ParamsSpec, RunConfig, SystemKind};
use crate::error::{CliError, Result};
use crate::output::{version, Report};

/// A finished command: the table to write, plus an optional verdict.
#[derive(Debug)]
pub struct Execution {
    pub report: Report,
    /// Success note for stderr (kept off stdout, which carries the CSV).
    pub summary: Option<String>,
    /// Check-failure note; the caller turns it into exit code 3 after the
    /// report is written.
    pub failure: Option<String>,
}

impl Execution {
    fn ok(report: Report) -> Self {
        Execution {
            report,
            summary: None,
            failure: None,
        }
    }
}

/// Size the global worker pool (first call wins; later calls are no-ops,
/// which is fine — the pool only affects wall time, never results).
pub fn init_workers(n: Option<usize>) {
    if let Some(n) = n.filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

/// Parse flags, load the configuration, execute, write.
pub fn dispatch(cli: Cli) -> Result<()> {
    let (kind, workers) = match &cli.command {
        Command::Exact(_) => (CommandKind::Exact, None),
        Command::Forced(_) => (CommandKind::Forced, None),
        Command::Single(_) => (CommandKind::Single, None),
        Command::Simulate(a) => (CommandKind::Simulate, a.workers),
        Command::Sweep(a) => (CommandKind::Sweep, a.workers),
        Command::NoiseCheck(_) => (CommandKind::NoiseCheck, None),
    };
    let common = cli.command.common();
    let overrides = cli.command.overrides();
    init_workers(workers);
    let cfg = RunConfig::load(kind, &common.config, &overrides)?;
    let exec = execute(&cfg)?;
    exec.report.write(common.out.as_deref())?;
    if let Some(note) = &exec.summary {
        eprintln!("{note}");
    }
    if let Some(why) = exec.failure {
        eprintln!("{why}");
        return Err(CliError::Check(why));
    }
    Ok(())
}

/// Run a fully resolved configuration. Pure: no flags, no I/O, no worker
/// pool changes — given the same `RunConfig` (for instance one recovered
/// from an output header) it reproduces the same rows bit-for-bit.
pub fn execute(cfg: &RunConfig) -> Result<Execution> {
    match cfg.command {
        CommandKind::Exact => exact_report(cfg),
        CommandKind::Forced => forced_report(cfg),
        CommandKind::Single => single_report(cfg),
        CommandKind::Sweep => sweep_report(cfg),
        CommandKind::Simulate => simulate_report(cfg),
        CommandKind::NoiseCheck => noise_report(cfg),
    }
}

fn base_meta(cfg: &RunConfig) -> Vec<(String, String)> {
    let tolerances = match cfg.command {
        CommandKind::NoiseCheck => {
            format!("max_periodogram_deviation={:e}", cfg.check_tol)
        }
        CommandKind::Simulate => "none (stochastic run; see per-row standard errors)".into(),
        _ => format!(
            "kernel_rel_tol={:e} grid_scale={} max_tail_fraction={:e}",
            cfg.quad.kernel_rel_tol, cfg.quad.grid_scale, cfg.quad.max_tail_fraction
        ),
    };
    vec![
        ("version".into(), format!("motor-cli {}", version())),
        ("command".into(), cfg.command.name().into()),
        (
            "config".into(),
            serde_json::to_string(cfg).expect("run configuration serializes"),
        ),
        ("seed".into(), cfg.sim.seed.to_string()),
        ("tolerances".into(), tolerances),
    ]
}

fn scales_of(params: &ParamsSpec) -> Option<crate::units::BaseScales> {
    match params {
        ParamsSpec::Physical(p) => Some(p.scales()),
        ParamsSpec::Reduced(_) => None,
    }
}

fn diagnostics_columns() -> [&'static str; 3] {
    ["tau_max", "n_tau", "tail_fraction"]
}

fn push_diagnostics(row: &mut Vec<f64>, est: &VelocityEstimate) {
    row.push(est.diagnostics.tau_max);
    row.push(est.diagnostics.n_tau as f64);
    row.push(est.diagnostics.tail_fraction);
}

fn exact_report(cfg: &RunConfig) -> Result<Execution> {
    let params = cfg.motor_params_of(&cfg.params)?;
    let est = steady_velocity_with(&params, &cfg.quad.settings())?;

    let mut columns = vec!["v".to_string(), "abs_error".to_string()];
    let mut row = vec![est.value, est.abs_error];
    if let Some(s) = scales_of(&cfg.params) {
        columns.push("v_um_per_s".into());
        row.push(s.velocity_um_per_s(est.value));
    }
    columns.extend(diagnostics_columns().map(String::from));
    push_diagnostics(&mut row, &est);

    Ok(Execution::ok(Report {
        meta: base_meta(cfg),
        columns,
        rows: vec![row],
    }))
}

fn forced_report(cfg: &RunConfig) -> Result<Execution> {
    let params = cfg.motor_params_of(&cfg.params)?;
    let forces = ForceSpec {
        f1: cfg.forces.f1,
        f2: cfg.forces.f2,
    };
    let est = forced_velocity_with(&params, &forces, &cfg.quad.settings())?;
    // extracted power −F̄·v; defined only against an equal load
    let work_rate = if forces.f1 == forces.f2 {
        -forces.f1 * est.value
    } else {
        f64::NAN
    };

    let mut columns: Vec<String> = ["f1", "f2", "v", "abs_error", "work_rate"]
        .map(String::from)
        .to_vec();
    columns.extend(diagnostics_columns().map(String::from));
    let mut row = vec![forces.f1, forces.f2, est.value, est.abs_error, work_rate];
    push_diagnostics(&mut row, &est);

    Ok(Execution::ok(Report {
        meta: base_meta(cfg),
        columns,
        rows: vec![row],
    }))
}

fn single_report(cfg: &RunConfig) -> Result<Execution> {
    let (bath, m, b, v0) = cfg.single_parts_of(&cfg.params)?;
    let f = cfg.forces.f;
    let est = single_particle_velocity_with(&bath, m, b, v0, f, &cfg.quad.settings())?;

    let mut columns: Vec<String> = ["f", "v", "abs_error", "work_rate"]
        .map(String::from)
        .to_vec();
    columns.extend(diagnostics_columns().map(String::from));
    let mut row = vec![f, est.value, est.abs_error, -f * est.value];
    push_diagnostics(&mut row, &est);

    Ok(Execution::ok(Report {
        meta: base_meta(cfg),
        columns,
        rows: vec![row],
    }))
}

/// One quadrature sweep point: the row for axis value `x`. Public and
/// stateless so that order-independence is checkable from outside.
pub fn sweep_point(cfg: &RunConfig, x: f64) -> Result<Vec<f64>> {
    let sw = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep_point needs a sweep axis".into()))?;
    let (params, forces) = cfg.at_axis(sw.axis, x)?;
    let settings = cfg.quad.settings();
    let est = match cfg.system {
        SystemKind::Motor => {
            let p = cfg.motor_params_of(&params)?;
            if forces.f1 != 0.0 || forces.f2 != 0.0 {
                forced_velocity_with(
                    &p,
                    &ForceSpec {
                        f1: forces.f1,
                        f2: forces.f2,
                    },
                    &settings,
                )?
            } else {
                steady_velocity_with(&p, &settings)?
            }
        }
        SystemKind::Single => {
            let (bath, m, b, v0) = cfg.single_parts_of(&params)?;
            single_particle_velocity_with(&bath, m, b, v0, forces.f, &settings)?
        }
    };
    let mut row = vec![x, est.value, est.abs_error];
    if let Some(s) = scales_of(&params) {
        row.push(s.velocity_um_per_s(est.value));
    }
    if sw.axis == Axis::F {
        row.push(-x * est.value);
    }
    Ok(row)
}

fn sweep_columns(cfg: &RunConfig) -> Vec<String> {
    let sw = cfg.sweep.as_ref().expect("validated sweep");
    let mut columns = vec![
        sw.axis.name().to_string(),
        "v".to_string(),
        "abs_error".to_string(),
    ];
    if cfg.params.is_physical() {
        columns.push("v_um_per_s".into());
    }
    if sw.axis == Axis::F {
        columns.push("work_rate".into());
    }
    columns
}

fn sweep_report(cfg: &RunConfig) -> Result<Execution> {
    let sw = cfg.sweep.as_ref().expect("validated sweep");
    let rows = sw
        .values()
        .into_par_iter()
        .map(|x| sweep_point(cfg, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(Execution::ok(Report {
        meta: base_meta(cfg),
        columns: sweep_columns(cfg),
        rows,
    }))
}

/// One ensemble run: the row for axis value `x` (or for the base
/// configuration when `x` is `None`).
pub fn simulate_point(cfg: &RunConfig, x: Option<f64>) -> Result<Vec<f64>> {
    let (params, forces) = match (x, &cfg.sweep) {
        (Some(x), Some(sw)) => cfg.at_axis(sw.axis, x)?,
        _ => (cfg.params, cfg.forces),
    };
    let system = cfg.sim_system_of(&params, &forces)?;
    let dt = cfg.sim.dt.unwrap_or_else(|| system.suggested_dt());
    let plan = SimConfig {
        dt,
        n_steps: cfg.sim.steps,
        n_traj: cfg.sim.traj,
        master_seed: cfg.sim.seed,
        mode: cfg.sim.mode,
        estimator_window: cfg.sim.window,
        initial_conditions: cfg.sim.initial,
    };
    let res: EnsembleResult = run_ensemble(&system, &plan)?;

    let mut row = Vec::new();
    if let Some(x) = x {
        row.push(x);
    }
    row.push(dt);
    row.push(res.velocity.value);
    row.push(res.velocity.abs_error);
    match cfg.system {
        SystemKind::Motor => {
            let (msr, msr_se) = res.mean_sq_relative.unwrap_or((f64::NAN, f64::NAN));
            row.push(msr);
            row.push(msr_se);
            for &(ke, ke_se) in &res.kinetic_energy {
                row.push(ke);
                row.push(ke_se);
            }
        }
        SystemKind::Single => {
            let (ke, ke_se) = res.kinetic_energy[0];
            row.push(ke);
            row.push(ke_se);
        }
    }
    Ok(row)
}

fn simulate_columns(cfg: &RunConfig) -> Vec<String> {
    let mut columns = Vec::new();
    if let Some(sw) = &cfg.sweep {
        columns.push(sw.axis.name().to_string());
    }
    columns.push("dt".into());
    columns.push("v".into());
    columns.push("v_se".into());
    match cfg.system {
        SystemKind::Motor => {
            for c in ["msr", "msr_se", "ke1", "ke1_se", "ke2", "ke2_se"] {
                columns.push(c.into());
            }
        }
        SystemKind::Single => {
            columns.push("ke".into());
            columns.push("ke_se".into());
        }
    }
    columns
}

fn simulate_report(cfg: &RunConfig) -> Result<Execution> {
    let points: Vec<Option<f64>> = match &cfg.sweep {
        Some(sw) => sw.values().into_iter().map(Some).collect(),
        None => vec![None],
    };
    // sequential over points — each ensemble is already trajectory-parallel
    let rows = points
        .into_iter()
        .map(|x| simulate_point(cfg, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(Execution::ok(Report {
        meta: base_meta(cfg),
        columns: simulate_columns(cfg),
        rows,
    }))
}

fn noise_report(cfg: &RunConfig) -> Result<Execution> {
    let r = cfg.params.reduced();
    let cutoff = r.cutoff.to_kind();
    let temperatures: Vec<(usize, f64)> = match cfg.system {
        SystemKind::Motor => vec![(1, r.t1), (2, r.t2())],
        SystemKind::Single => vec![(1, r.t1)],
    };
    let system = cfg.sim_system_of(&cfg.params, &cfg.forces)?;
    let dt = cfg.sim.dt.unwrap_or_else(|| system.suggested_dt());
    let n = cfg.sim.steps;

    let mut meta = base_meta(cfg);
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (index, temperature) in temperatures {
        let spec = BathSpec::new(r.eta0, cutoff, temperature, r.hbar)?;
        let spec = match cfg.sim.mode {
            Mode::Qmd => spec,
            Mode::Md => spec.classical(),
        };
        let seed = derive_track_seed(cfg.sim.seed, 0, (index - 1) as u64);
        let track = synthesize(&spec, n, dt, seed)?;
        let deviations = periodogram_check(&track, cfg.bins)?;

        // grid bookkeeping mirrors the periodogram binning: `bins` equal
        // groups of the interior modes k = 1 .. n/2-1
        let modes = n / 2 - 1;
        let mut max_dev: f64 = 0.0;
        for (bin, &dev) in deviations.iter().enumerate() {
            let lo = 1 + bin * modes / cfg.bins;
            let hi = 1 + (bin + 1) * modes / cfg.bins;
            let omega_mid =
                std::f64::consts::TAU * (lo + hi) as f64 / 2.0 / (n as f64 * dt);
            rows.push(vec![index as f64, bin as f64, omega_mid, dev]);
            max_dev = max_dev.max(dev.abs());
        }
        worst = worst.max(max_dev);

        let measured: f64 =
            track.samples.iter().map(|x| x * x).sum::<f64>() / track.samples.len() as f64;
        let expected = expected_mean_square(&spec, n, dt);
        meta.push((
            format!("bath{index}"),
            format!(
                "T={temperature:e} mean_square measured={measured:e} expected={expected:e} \
                 nyquist_weight={:.3}% max_deviation={:.3}%",
                100.0 * track.nyquist_ratio,
                100.0 * max_dev
            ),
        ));
    }

    let columns = ["bath", "bin", "omega_mid", "rel_deviation"]
        .map(String::from)
        .to_vec();
    let report = Report {
        meta,
        columns,
        rows,
    };
    let verdict = format!(
        "noise-check: max |periodogram deviation| {:.3}% over {} bins at {} samples \
         (tolerance {:.1}%)",
        100.0 * worst,
        cfg.bins,
        n,
        100.0 * cfg.check_tol
    );
    if worst > cfg.check_tol {
        Ok(Execution {
            report,
            summary: None,
            failure: Some(format!("{verdict}: FAILED")),
        })
    } else {
        Ok(Execution {
            report,
            summary: Some(format!("{verdict}: ok")),
            failure: None,
        })
    }
}

/// Discrete-grid stationary mean square implied by the synthesis spectrum:
/// `(n·dt)⁻¹ Σ_k S(ω_k)` over the full FFT grid.
fn expected_mean_square(spec: &BathSpec, n: usize, dt: f64) -> f64 {
    let half = n / 2;
    let mut sum =
        symmetric_psd(spec, 0.0) + symmetric_psd(spec, std::f64::consts::PI / dt);
    for k in 1..half {
        let omega = std::f64::consts::TAU * k as f64 / (n as f64 * dt);
        sum += 2.0 * symmetric_psd(spec, omega);
    }
    sum / (n as f64 * dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Overrides;

    const SWEEP_TOML: &str = r#"
        units = "reduced"
        [params]
        k = 1.0
        v0 = 0.5
        t1 = 1.0
        t2 = 2.5
        [sweep]
        axis = "k"
        min = 0.2
        max = 5.0
        points = 5
        log = true
    "#;

    #[test]
    fn sweep_rows_do_not_depend_on_evaluation_order() {
        let cfg =
            RunConfig::from_toml(CommandKind::Sweep, SWEEP_TOML, &Overrides::default()).unwrap();
        let exec = execute(&cfg).unwrap();
        let xs: Vec<f64> = cfg.sweep.as_ref().unwrap().values();
        let mut reversed: Vec<Vec<f64>> = xs
            .iter()
            .rev()
            .map(|&x| sweep_point(&cfg, x).unwrap())
            .collect();
        reversed.reverse();
        assert_eq!(
            exec.report.rows, reversed,
            "per-point results must be identical regardless of evaluation order"
        );
    }

    #[test]
    fn rendered_output_reproduces_from_its_own_header() {
        let cfg =
            RunConfig::from_toml(CommandKind::Sweep, SWEEP_TOML, &Overrides::default()).unwrap();
        let text = execute(&cfg).unwrap().report.render();
        let json = crate::output::config_line(&text).expect("config header line");
        let recovered: RunConfig = serde_json::from_str(json).unwrap();
        assert_eq!(recovered, cfg);
        let again = execute(&recovered).unwrap().report.render();
        assert_eq!(again, text, "self-described rerun must be bit-identical");
    }

    #[test]
    fn forced_work_rate_is_minus_force_times_velocity() {
        let toml = r#"
            units = "reduced"
            [params]
            k = 1.0
            v0 = 0.5
            t1 = 1.0
            t2 = 2.5
            [forces]
            f1 = 0.05
            f2 = 0.05
        "#;
        let cfg =
            RunConfig::from_toml(CommandKind::Forced, toml, &Overrides::default()).unwrap();
        let exec = execute(&cfg).unwrap();
        let row = &exec.report.rows[0];
        let (v, work) = (row[2], row[4]);
        assert!((work + 0.05 * v).abs() < 1e-15);
    }

    #[test]
    fn noise_check_passes_ohmic_and_flags_undersampled_cutoffs() {
        let ok_toml = r#"
            units = "reduced"
            [params]
            k = 1.0
            v0 = 0.5
            t1 = 1.0
            t2 = 2.5
            [sim]
            dt = 0.1
            steps = 16384
        "#;
        let cfg =
            RunConfig::from_toml(CommandKind::NoiseCheck, ok_toml, &Overrides::default())
                .unwrap();
        let exec = execute(&cfg).unwrap();
        assert!(exec.failure.is_none());
        assert!(exec.summary.unwrap().contains("ok"));
        assert_eq!(exec.report.rows.len(), 2 * cfg.bins, "two baths");

        // a soft cutoff far above the Nyquist frequency must fail synthesis
        let bad_toml = r#"
            units = "reduced"
            [params]
            k = 1.0
            v0 = 0.5
            t1 = 1.0
            t2 = 2.5
            cutoff = { kind = "soft", lambda = 100.0 }
            [sim]
            dt = 1.0
            steps = 2048
        "#;
        let cfg =
            RunConfig::from_toml(CommandKind::NoiseCheck, bad_toml, &Overrides::default())
                .unwrap();
        let err = execute(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn simulate_emits_one_row_per_sweep_point() {
        let toml = r#"
            units = "reduced"
            [params]
            k = 1.0
            v0 = 0.5
            t1 = 1.0
            t2 = 2.5
            [sim]
            steps = 1024
            traj = 4
            seed = 7
            mode = "md"
            [sweep]
            axis = "k"
            min = 0.5
            max = 2.0
            points = 3
        "#;
        let cfg =
            RunConfig::from_toml(CommandKind::Simulate, toml, &Overrides::default()).unwrap();
        let exec = execute(&cfg).unwrap();
        assert_eq!(exec.report.rows.len(), 3);
        assert_eq!(exec.report.columns[0], "k");
        let dts: Vec<f64> = exec.report.rows.iter().map(|r| r[1]).collect();
        assert!(
            dts[0] > dts[2],
            "automatic dt must tighten as the sweep stiffens the system: {dts:?}"
        );
        for row in &exec.report.rows {
            assert!(row.iter().all(|x| x.is_finite()));
            assert!(row[3] > 0.0, "standard error column");
        }
    }
}
