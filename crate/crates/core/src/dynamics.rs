//! Langevin trajectory integration for the two-particle motor and the single
//! tilted-potential particle, with quantum-colored (QMD) or classical white
//! (MD) noise, and ensemble steady-velocity estimation.
//!
//! The integrator is a BAOAB splitting. Friction is Ohmic (memoryless), so
//! the O-substep damps momentum by the exact exponential `c = e^{−γ·dt}`
//! (γ = η₀/m) and injects the pre-synthesized noise sample as an impulse
//! `α·ξ_n·dt` with `α = √((1−c²)/(2γ·dt))`. For classical white noise this
//! O-step is the exact Ornstein–Uhlenbeck update — equipartition holds at
//! any stable dt — and for colored noise α → 1 as dt → 0, so the scheme
//! converges to the colored-noise Langevin equation. Accuracy in dt is
//! validated by convergence tests rather than assumed.

use crate::bath::{BathSpec, CutoffKind, MotorParams};
use crate::colored_noise::{derive_track_seed, synthesize};
use crate::error::{MotorError, Result};
use crate::velocity::{force_fingerprint, Diagnostics, ForceSpec, Method, VelocityEstimate};
use crate::Fnv1a;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Which noise statistics drive the trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Quantum colored noise: the full symmetrized fluctuation spectrum,
    /// including zero-point weight.
    Qmd,
    /// Classical baths: flat (white) thermal spectrum at the same
    /// temperatures.
    Md,
}

/// How each trajectory starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InitialConditions {
    /// All positions and momenta zero; the estimator window discards the
    /// transient.
    #[default]
    Origin,
    /// Positions zero, momenta Maxwell-distributed at each particle's bath
    /// temperature (classical Maxwell in both modes — a transient-shortening
    /// device, not a statement about the quantum stationary state).
    Thermal,
}

fn default_window() -> f64 {
    0.5
}

/// Ensemble integration plan.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    /// Steps per trajectory; a power of two ≥ 1024 (one noise block).
    pub n_steps: usize,
    pub n_traj: usize,
    pub master_seed: u64,
    pub mode: Mode,
    /// Trailing fraction of each trajectory used by the estimators.
    #[serde(default = "default_window")]
    pub estimator_window: f64,
    #[serde(default)]
    pub initial_conditions: InitialConditions,
}

impl SimConfig {
    /// Estimator window = latter half, origin start.
    pub fn new(mode: Mode, dt: f64, n_steps: usize, n_traj: usize, master_seed: u64) -> Self {
        SimConfig {
            dt,
            n_steps,
            n_traj,
            master_seed,
            mode,
            estimator_window: default_window(),
            initial_conditions: InitialConditions::Origin,
        }
    }

    /// Check the plan against the stiffest frequency of the system,
    /// `ω_max = max(√((2k + V0·b²)/m), η₀/m)`: the step must resolve it
    /// (`dt·ω_max < 0.1`).
    pub fn validate(&self, omega_max: f64) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(MotorError::InvalidParams(format!(
                "time step must be positive and finite, got {}",
                self.dt
            )));
        }
        if !self.n_steps.is_power_of_two() || self.n_steps < 1024 {
            return Err(MotorError::InvalidParams(format!(
                "n_steps must be a power of two >= 1024 (one noise block), got {}",
                self.n_steps
            )));
        }
        if !(self.estimator_window > 0.0 && self.estimator_window <= 1.0) {
            return Err(MotorError::InvalidParams(format!(
                "estimator window must lie in (0, 1], got {}",
                self.estimator_window
            )));
        }
        if self.dt * omega_max >= 0.1 {
            return Err(MotorError::InvalidParams(format!(
                "dt·ω_max = {:.3} ≥ 0.1: reduce dt below {:.3e} for stability",
                self.dt * omega_max,
                0.1 / omega_max
            )));
        }
        Ok(())
    }

    fn hash_into(&self, h: &mut Fnv1a) {
        h.write_f64(self.dt);
        h.write_u64(self.n_steps as u64);
        h.write_u64(self.n_traj as u64);
        h.write_u64(self.master_seed);
        h.write_u64(match self.mode {
            Mode::Qmd => 1,
            Mode::Md => 2,
        });
        h.write_f64(self.estimator_window);
        h.write_u64(match self.initial_conditions {
            InitialConditions::Origin => 0,
            InitialConditions::Thermal => 1,
        });
    }
}

/// What to simulate.
#[derive(Debug, Clone, Copy)]
pub enum SimSystem {
    /// Two coupled particles, each in its own corrugated potential and bath.
    Motor {
        params: MotorParams,
        forces: ForceSpec,
    },
    /// One particle in `−V₀cos(bx) − F·x` coupled to one bath.
    Single {
        bath: BathSpec,
        m: f64,
        b: f64,
        v0: f64,
        force: f64,
    },
}

impl SimSystem {
    /// Stiffest frequency scale, for the dt stability rule.
    pub fn omega_max(&self) -> f64 {
        match *self {
            SimSystem::Motor { params, .. } => {
                let spring = ((2.0 * params.k + params.v0 * params.b * params.b) / params.m).sqrt();
                spring.max(params.bath1.eta0 / params.m)
            }
            SimSystem::Single { bath, m, b, v0, .. } => {
                (v0 * b * b / m).sqrt().max(bath.eta0 / m)
            }
        }
    }

    /// A step comfortably inside the stability bound.
    pub fn suggested_dt(&self) -> f64 {
        0.08 / self.omega_max()
    }

    fn validate(&self) -> Result<()> {
        match self {
            SimSystem::Motor { params, forces } => {
                params.validate()?;
                forces.validate()?;
                require_ohmic(&params.bath1)
            }
            SimSystem::Single { bath, m, b, v0, force } => {
                if !(m.is_finite() && *m > 0.0) || !(b.is_finite() && *b > 0.0) {
                    return Err(MotorError::InvalidParams(format!(
                        "mass and wavenumber must be positive, got m={m}, b={b}"
                    )));
                }
                if !v0.is_finite() || *v0 < 0.0 || !force.is_finite() {
                    return Err(MotorError::InvalidParams(format!(
                        "need V0 >= 0 and finite force, got V0={v0}, F={force}"
                    )));
                }
                require_ohmic(bath)
            }
        }
    }

    fn fingerprint(&self) -> u64 {
        match self {
            SimSystem::Motor { params, forces } => force_fingerprint(params, forces),
            SimSystem::Single { bath, m, b, v0, force } => {
                let mut h = Fnv1a::new();
                bath.hash_into(&mut h);
                h.write_f64(*m);
                h.write_f64(*b);
                h.write_f64(*v0);
                h.write_f64(*force);
                h.finish()
            }
        }
    }
}

fn require_ohmic(bath: &BathSpec) -> Result<()> {
    if matches!(bath.cutoff, CutoffKind::Ohmic) {
        Ok(())
    } else {
        Err(MotorError::Unsupported(
            "trajectory integration supports Ohmic friction only (memoryless kernel); \
             structured cutoffs are available through the kernel quadrature"
                .into(),
        ))
    }
}

/// One integrated trajectory: decimated center-of-mass track plus
/// window-averaged observables.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    /// Center-of-mass position every `stride` steps (first entry at t=0).
    pub com: Vec<f64>,
    /// Steps between stored samples.
    pub stride: usize,
    pub dt: f64,
    /// Least-squares center-of-mass velocity over the estimator window.
    pub slope: f64,
    /// Window average of `(Q₁−Q₂)²` (two-particle runs only).
    pub mean_sq_relative: Option<f64>,
    /// Window average of `Pᵢ²/2m` per particle.
    pub kinetic: Vec<f64>,
}

/// Noise spectrum actually synthesized for a bath under the given mode.
fn effective_bath(bath: &BathSpec, mode: Mode) -> BathSpec {
    match mode {
        Mode::Qmd => *bath,
        Mode::Md => bath.classical(),
    }
}

fn thermal_momentum(m: f64, temperature: f64, seed: u64) -> f64 {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let g: f64 = rng.sample(StandardNormal);
    (m * temperature).sqrt() * g
}

/// BAOAB loop over `N` particles sharing one mass and friction constant.
fn baoab_run<const N: usize>(
    m: f64,
    eta0: f64,
    cfg: &SimConfig,
    tracks: [&[f64]; N],
    q0: [f64; N],
    p0: [f64; N],
    force: impl Fn(&[f64; N]) -> [f64; N],
    traj_index: u64,
) -> Result<TrajectoryRecord> {
    let n = cfg.n_steps;
    let dt = cfg.dt;
    let gamma = eta0 / m;
    let c = (-gamma * dt).exp();
    let alpha = ((1.0 - c * c) / (2.0 * gamma * dt)).sqrt();
    let stride = (n / 4096).max(1);
    let window_start = ((1.0 - cfg.estimator_window) * n as f64).ceil() as usize;

    let mut q = q0;
    let mut p = p0;
    let mut f = force(&q);
    let mut com = Vec::with_capacity(n / stride + 1);
    let com_of = |q: &[f64; N]| q.iter().sum::<f64>() / N as f64;
    com.push(com_of(&q));
    let mut sum_sq_rel = 0.0;
    let mut sum_p2 = [0.0; N];
    let mut n_window = 0u64;

    for step in 0..n {
        for i in 0..N {
            p[i] += 0.5 * dt * f[i];
            q[i] += 0.5 * dt * p[i] / m;
            p[i] = c * p[i] + alpha * dt * tracks[i][step];
            q[i] += 0.5 * dt * p[i] / m;
        }
        f = force(&q);
        let mut finite = true;
        for i in 0..N {
            p[i] += 0.5 * dt * f[i];
            finite &= q[i].is_finite() && p[i].is_finite();
        }
        if !finite {
            return Err(MotorError::BlowUp {
                traj: traj_index,
                step,
            });
        }
        if (step + 1) % stride == 0 {
            com.push(com_of(&q));
        }
        if step >= window_start {
            if N == 2 {
                let y = q[0] - q[1];
                sum_sq_rel += y * y;
            }
            for i in 0..N {
                sum_p2[i] += p[i] * p[i];
            }
            n_window += 1;
        }
    }

    let inv_w = 1.0 / n_window.max(1) as f64;
    let sample_dt = stride as f64 * dt;
    let first_window_sample = window_start.div_ceil(stride);
    let slope = lsq_slope(sample_dt, &com[first_window_sample..]);
    Ok(TrajectoryRecord {
        com,
        stride,
        dt,
        slope,
        mean_sq_relative: (N == 2).then_some(sum_sq_rel * inv_w),
        kinetic: sum_p2.iter().map(|s| s * inv_w / (2.0 * m)).collect(),
    })
}

/// Slope of the least-squares line through equally spaced samples.
fn lsq_slope(sample_dt: f64, xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let t_mean = 0.5 * (n - 1) as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (j, &x) in xs.iter().enumerate() {
        let dt_j = j as f64 - t_mean;
        sxy += dt_j * x;
        sxx += dt_j * dt_j;
    }
    sxy / (sxx * sample_dt)
}

/// Integrate one motor trajectory: `m Q̈ᵢ = −η₀Q̇ᵢ − V₀b sin(bQᵢ+φᵢ)
/// − k(Qᵢ−Qⱼ) + ξᵢ(t) + F̄ᵢ` with φ₁=0, φ₂=φ, noise per particle
/// pre-synthesized from seeds derived from (master_seed, traj_index).
pub fn integrate_motor(
    params: &MotorParams,
    forces: &ForceSpec,
    cfg: &SimConfig,
    traj_index: u64,
) -> Result<TrajectoryRecord> {
    let system = SimSystem::Motor {
        params: *params,
        forces: *forces,
    };
    system.validate()?;
    cfg.validate(system.omega_max())?;
    let baths = [
        effective_bath(&params.bath1, cfg.mode),
        effective_bath(&params.bath2, cfg.mode),
    ];
    let track1 = synthesize(
        &baths[0],
        cfg.n_steps,
        cfg.dt,
        derive_track_seed(cfg.master_seed, traj_index, 0),
    )?;
    let track2 = synthesize(
        &baths[1],
        cfg.n_steps,
        cfg.dt,
        derive_track_seed(cfg.master_seed, traj_index, 1),
    )?;
    let p0 = match cfg.initial_conditions {
        InitialConditions::Origin => [0.0; 2],
        InitialConditions::Thermal => [
            thermal_momentum(
                params.m,
                params.bath1.temperature,
                derive_track_seed(cfg.master_seed, traj_index, 2),
            ),
            thermal_momentum(
                params.m,
                params.bath2.temperature,
                derive_track_seed(cfg.master_seed, traj_index, 3),
            ),
        ],
    };
    let (m, k, b, v0, phi) = (params.m, params.k, params.b, params.v0, params.phi);
    let (f1, f2) = (forces.f1, forces.f2);
    baoab_run(
        m,
        params.bath1.eta0,
        cfg,
        [&track1.samples, &track2.samples],
        [0.0; 2],
        p0,
        move |q: &[f64; 2]| {
            let spring = k * (q[0] - q[1]);
            [
                -v0 * b * (b * q[0]).sin() - spring + f1,
                -v0 * b * (b * q[1] + phi).sin() + spring + f2,
            ]
        },
        traj_index,
    )
}

/// Integrate one single-particle trajectory in `U(x) = −V₀cos(bx) − F·x`.
pub fn integrate_single(
    bath: &BathSpec,
    m: f64,
    b: f64,
    v0: f64,
    force: f64,
    cfg: &SimConfig,
    traj_index: u64,
) -> Result<TrajectoryRecord> {
    let system = SimSystem::Single {
        bath: *bath,
        m,
        b,
        v0,
        force,
    };
    system.validate()?;
    cfg.validate(system.omega_max())?;
    let track = synthesize(
        &effective_bath(bath, cfg.mode),
        cfg.n_steps,
        cfg.dt,
        derive_track_seed(cfg.master_seed, traj_index, 0),
    )?;
    let p0 = match cfg.initial_conditions {
        InitialConditions::Origin => [0.0],
        InitialConditions::Thermal => [thermal_momentum(
            m,
            bath.temperature,
            derive_track_seed(cfg.master_seed, traj_index, 2),
        )],
    };
    baoab_run(
        m,
        bath.eta0,
        cfg,
        [&track.samples],
        [0.0],
        p0,
        move |q: &[f64; 1]| [-v0 * b * (b * q[0]).sin() + force],
        traj_index,
    )
}

/// Ensemble summary: pointwise-averaged center-of-mass track and the
/// steady velocity as mean ± standard error of per-trajectory slopes.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    /// Times of the saved samples.
    pub times: Vec<f64>,
    pub mean_com_trajectory: Vec<f64>,
    pub velocity: VelocityEstimate,
    pub per_traj_slopes: Vec<f64>,
    /// Ensemble (mean, standard error) of the window-averaged `(Q₁−Q₂)²`
    /// (two-particle systems).
    pub mean_sq_relative: Option<(f64, f64)>,
    /// Ensemble (mean, standard error) of the per-particle kinetic energy.
    pub kinetic_energy: Vec<(f64, f64)>,
    /// Hash of the system parameters and the integration plan.
    pub fingerprint: u64,
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Run `cfg.n_traj` independent trajectories (parallel, deterministically
/// seeded) and estimate the steady center-of-mass velocity.
pub fn run_ensemble(system: &SimSystem, cfg: &SimConfig) -> Result<EnsembleResult> {
    system.validate()?;
    cfg.validate(system.omega_max())?;
    if cfg.n_traj < 2 {
        return Err(MotorError::InvalidParams(format!(
            "ensemble needs at least 2 trajectories for a standard error, got {}",
            cfg.n_traj
        )));
    }
    let records: Vec<TrajectoryRecord> = (0..cfg.n_traj as u64)
        .into_par_iter()
        .map(|traj| match system {
            SimSystem::Motor { params, forces } => integrate_motor(params, forces, cfg, traj),
            SimSystem::Single {
                bath,
                m,
                b,
                v0,
                force,
            } => integrate_single(bath, *m, *b, *v0, *force, cfg, traj),
        })
        .collect::<Result<Vec<_>>>()?;

    let n_saved = records[0].com.len();
    let sample_dt = records[0].stride as f64 * cfg.dt;
    let mut mean_com = vec![0.0; n_saved];
    for rec in &records {
        for (acc, &x) in mean_com.iter_mut().zip(&rec.com) {
            *acc += x;
        }
    }
    let inv_n = 1.0 / cfg.n_traj as f64;
    mean_com.iter_mut().for_each(|x| *x *= inv_n);
    let times = (0..n_saved).map(|j| j as f64 * sample_dt).collect();

    let per_traj_slopes: Vec<f64> = records.iter().map(|r| r.slope).collect();
    let (v_mean, v_se) = mean_se(&per_traj_slopes);

    let mean_sq_relative = records[0].mean_sq_relative.map(|_| {
        let vals: Vec<f64> = records
            .iter()
            .map(|r| r.mean_sq_relative.expect("uniform record shape"))
            .collect();
        mean_se(&vals)
    });
    let n_particles = records[0].kinetic.len();
    let kinetic_energy = (0..n_particles)
        .map(|i| {
            let vals: Vec<f64> = records.iter().map(|r| r.kinetic[i]).collect();
            mean_se(&vals)
        })
        .collect();

    let mut h = Fnv1a::new();
    h.write_u64(system.fingerprint());
    cfg.hash_into(&mut h);
    let fingerprint = h.finish();

    Ok(EnsembleResult {
        times,
        mean_com_trajectory: mean_com,
        velocity: VelocityEstimate {
            value: v_mean,
            abs_error: v_se,
            method: match cfg.mode {
                Mode::Qmd => Method::Qmd,
                Mode::Md => Method::Md,
            },
            params_fingerprint: system.fingerprint(),
            // trajectory sampling has no perturbative truncation; the
            // quadrature-only diagnostics stay at their zero defaults
            diagnostics: Diagnostics {
                perturbative_ok: true,
                ..Diagnostics::default()
            },
        },
        per_traj_slopes,
        mean_sq_relative,
        kinetic_energy,
        fingerprint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::velocity::{single_particle_velocity, steady_velocity};

    fn ohmic(t: f64, hbar: f64) -> BathSpec {
        BathSpec::new(1.0, CutoffKind::Ohmic, t, hbar).unwrap()
    }

    /// Two particles, unit mass/wavenumber/friction, baths at (t1, t2).
    fn motor(k: f64, v0: f64, phi: f64, t1: f64, t2: f64, hbar: f64) -> MotorParams {
        MotorParams::new(1.0, k, 1.0, v0, phi, ohmic(t1, hbar), ohmic(t2, hbar)).unwrap()
    }

    #[test]
    fn relative_mode_reaches_quantum_stationary_variance() {
        // V0=0, equal unit temperatures, k=1: the relative coordinate is an
        // exactly solvable damped oscillator driven by both baths. Target:
        // half the frequency integral of the symmetrized noise spectrum
        // times the response, band-limited to the sampled Nyquist window
        // (dt=0.05), computed with 12-digit quadrature externally.
        let params = motor(1.0, 0.0, 0.0, 1.0, 1.0, 1.0);
        let cfg = SimConfig::new(Mode::Qmd, 0.05, 1 << 14, 24, 71);
        let out = run_ensemble(
            &SimSystem::Motor {
                params,
                forces: ForceSpec::none(),
            },
            &cfg,
        )
        .unwrap();
        let (msr, se) = out.mean_sq_relative.unwrap();
        let y2 = 0.5 * msr;
        let y2_se = 0.5 * se;
        let target = 5.7279412098e-01;
        assert!(
            (y2 - target).abs() < 3.0 * y2_se,
            "⟨Y²⟩ = {y2} ± {y2_se} vs {target}"
        );
    }

    #[test]
    fn com_velocity_vanishes_without_potential() {
        let params = motor(1.0, 0.0, 0.0, 1.0, 2.5, 1.0);
        let cfg = SimConfig::new(Mode::Qmd, 0.05, 1 << 13, 24, 5);
        let out = run_ensemble(
            &SimSystem::Motor {
                params,
                forces: ForceSpec::none(),
            },
            &cfg,
        )
        .unwrap();
        let v = &out.velocity;
        assert!(
            v.value.abs() < 2.0 * v.abs_error,
            "v = {} ± {}",
            v.value,
            v.abs_error
        );
    }

    #[test]
    fn in_phase_potentials_give_no_motor() {
        // φ=0 with V0>0 and a temperature difference: still no transport
        let params = motor(1.0, 0.5, 0.0, 1.0, 2.5, 1.0);
        let cfg = SimConfig::new(Mode::Qmd, 0.06, 1 << 13, 48, 9);
        let out = run_ensemble(
            &SimSystem::Motor {
                params,
                forces: ForceSpec::none(),
            },
            &cfg,
        )
        .unwrap();
        let v = &out.velocity;
        assert!(
            v.value.abs() < 2.0 * v.abs_error,
            "v = {} ± {}",
            v.value,
            v.abs_error
        );
    }

    #[test]
    fn ensemble_velocity_matches_second_order_quadrature() {
        // small-V0 regime: V0 = 0.5 against every scale ≥ 1
        let params = motor(1.0, 0.5, std::f64::consts::FRAC_PI_2, 1.0, 2.5, 1.0);
        let exact = steady_velocity(&params).unwrap();
        let cfg = SimConfig::new(Mode::Qmd, 0.05, 1 << 15, 512, 2024);
        let out = run_ensemble(
            &SimSystem::Motor {
                params,
                forces: ForceSpec::none(),
            },
            &cfg,
        )
        .unwrap();
        let v = &out.velocity;
        assert!(
            v.abs_error < 0.5 * exact.value.abs(),
            "ensemble too noisy to test agreement: {} vs {}",
            v.abs_error,
            exact.value
        );
        assert!(
            (v.value - exact.value).abs() < 2.0 * (v.abs_error + exact.abs_error),
            "QMD {} ± {} vs quadrature {} ± {}",
            v.value,
            v.abs_error,
            exact.value,
            exact.abs_error
        );
    }

    #[test]
    fn velocity_is_even_in_potential_amplitude() {
        // the public parameterization keeps V0 ≥ 0 (only V0² enters the
        // quadrature), so flip the corrugation sign at the integrator level
        // with identical noise and compare paired slope differences
        assert!(
            MotorParams::new(1.0, 1.0, 1.0, -0.5, 0.0, ohmic(1.0, 1.0), ohmic(1.0, 1.0)).is_err()
        );
        let params = motor(1.0, 0.5, std::f64::consts::FRAC_PI_2, 1.0, 2.5, 1.0);
        let cfg = SimConfig::new(Mode::Qmd, 0.05, 1 << 14, 96, 31);
        let run_signed = |sign: f64| -> Vec<f64> {
            (0..cfg.n_traj as u64)
                .into_par_iter()
                .map(|traj| {
                    let mk = |particle, bath: &BathSpec| {
                        synthesize(
                            bath,
                            cfg.n_steps,
                            cfg.dt,
                            derive_track_seed(cfg.master_seed, traj, particle),
                        )
                        .unwrap()
                    };
                    let (t1, t2) = (mk(0, &params.bath1), mk(1, &params.bath2));
                    let (k, b, v0, phi) = (params.k, params.b, sign * params.v0, params.phi);
                    baoab_run(
                        params.m,
                        params.bath1.eta0,
                        &cfg,
                        [&t1.samples, &t2.samples],
                        [0.0; 2],
                        [0.0; 2],
                        move |q: &[f64; 2]| {
                            let spring = k * (q[0] - q[1]);
                            [
                                -v0 * b * (b * q[0]).sin() - spring,
                                -v0 * b * (b * q[1] + phi).sin() + spring,
                            ]
                        },
                        traj,
                    )
                    .unwrap()
                    .slope
                })
                .collect()
        };
        let plus = run_signed(1.0);
        let minus = run_signed(-1.0);
        let diffs: Vec<f64> = plus.iter().zip(&minus).map(|(a, b)| a - b).collect();
        let (d_mean, d_se) = mean_se(&diffs);
        assert!(
            d_mean.abs() < 2.0 * d_se.max(1e-12),
            "v(+V0) − v(−V0) = {d_mean} ± {d_se}"
        );
    }

    #[test]
    fn single_particle_free_mobility_in_md() {
        // flat potential: drift must be F/η₀ (here 0.3)
        let cfg = SimConfig::new(Mode::Md, 0.08, 1 << 13, 32, 3);
        let out = run_ensemble(
            &SimSystem::Single {
                bath: ohmic(2.0, 0.0),
                m: 1.0,
                b: 1.0,
                v0: 0.0,
                force: 0.3,
            },
            &cfg,
        )
        .unwrap();
        let v = &out.velocity;
        assert!(
            (v.value - 0.3).abs() < 2.0 * v.abs_error,
            "v = {} ± {} vs 0.3",
            v.value,
            v.abs_error
        );
    }

    #[test]
    fn single_particle_qmd_matches_forced_quadrature() {
        let bath = ohmic(0.1, 1.0);
        let exact = single_particle_velocity(&bath, 1.0, 1.0, 0.1, 0.2).unwrap();
        let cfg = SimConfig::new(Mode::Qmd, 0.08, 1 << 15, 128, 17);
        let out = run_ensemble(
            &SimSystem::Single {
                bath,
                m: 1.0,
                b: 1.0,
                v0: 0.1,
                force: 0.2,
            },
            &cfg,
        )
        .unwrap();
        let v = &out.velocity;
        assert!(
            (v.value - exact.value).abs() < 2.0 * (v.abs_error + exact.abs_error),
            "QMD {} ± {} vs quadrature {} ± {}",
            v.value,
            v.abs_error,
            exact.value,
            exact.abs_error
        );
    }

    #[test]
    fn zero_tilt_single_particle_is_still() {
        let cfg = SimConfig::new(Mode::Qmd, 0.08, 1 << 13, 24, 13);
        let out = run_ensemble(
            &SimSystem::Single {
                bath: ohmic(0.5, 1.0),
                m: 1.0,
                b: 1.0,
                v0: 0.3,
                force: 0.0,
            },
            &cfg,
        )
        .unwrap();
        let v = &out.velocity;
        assert!(v.value.abs() < 2.0 * v.abs_error, "v = {} ± {}", v.value, v.abs_error);
    }

    #[test]
    fn quantum_noise_dominates_low_temperature_statistics() {
        // Deep-quantum regime (temperatures 40× below the zero-point scale):
        // the stationary spread of the relative mode is set by zero-point
        // noise in QMD but only by k_B T in MD, so the two modes separate by
        // more than an order of magnitude. (The steady *velocities* here are
        // ~1e−5 — resolving them needs ~10⁶ trajectories, far beyond desk
        // scale, and raising V0 freezes both modes alike because barrier
        // activation is driven by the ω→0 noise, where the quantum spectrum
        // reduces to the classical one. The noise-statistics gap is the
        // desk-scale observable of the quantum/classical separation.)
        let params = motor(0.5, 0.2, std::f64::consts::FRAC_PI_2, 0.01, 0.025, 1.0);
        let mk_cfg = |mode| SimConfig::new(mode, 0.05, 1 << 13, 24, 19);
        let system = SimSystem::Motor {
            params,
            forces: ForceSpec::none(),
        };
        let qmd = run_ensemble(&system, &mk_cfg(Mode::Qmd)).unwrap();
        let md = run_ensemble(&system, &mk_cfg(Mode::Md)).unwrap();
        assert_eq!(qmd.velocity.method, Method::Qmd);
        assert_eq!(md.velocity.method, Method::Md);
        let (yq, yq_se) = qmd.mean_sq_relative.unwrap();
        let (ym, ym_se) = md.mean_sq_relative.unwrap();
        assert!(
            yq - ym > 2.0 * (yq_se + ym_se),
            "no significant separation: QMD {yq} ± {yq_se} vs MD {ym} ± {ym_se}"
        );
        assert!(
            yq > 5.0 * ym,
            "expected order-of-magnitude separation: QMD {yq} vs MD {ym}"
        );
    }

    #[test]
    fn ensembles_are_deterministic() {
        let params = motor(1.0, 0.5, std::f64::consts::FRAC_PI_2, 1.0, 2.5, 1.0);
        let system = SimSystem::Motor {
            params,
            forces: ForceSpec::none(),
        };
        let cfg = SimConfig::new(Mode::Qmd, 0.05, 1 << 11, 8, 77);
        let a = run_ensemble(&system, &cfg).unwrap();
        let b = run_ensemble(&system, &cfg).unwrap();
        assert_eq!(a.velocity.value.to_bits(), b.velocity.value.to_bits());
        assert_eq!(a.mean_com_trajectory, b.mean_com_trajectory);
        assert_eq!(a.fingerprint, b.fingerprint);
        let mut other = cfg;
        other.master_seed = 78;
        let c = run_ensemble(&system, &other).unwrap();
        assert_ne!(a.velocity.value.to_bits(), c.velocity.value.to_bits());
        assert_ne!(a.fingerprint, c.fingerprint);
    }

    #[test]
    fn standard_error_shrinks_with_ensemble_size() {
        let params = motor(1.0, 0.5, std::f64::consts::FRAC_PI_2, 1.0, 2.5, 1.0);
        let system = SimSystem::Motor {
            params,
            forces: ForceSpec::none(),
        };
        let mut cfg = SimConfig::new(Mode::Qmd, 0.05, 1 << 12, 48, 55);
        let small = run_ensemble(&system, &cfg).unwrap();
        cfg.n_traj = 96;
        let large = run_ensemble(&system, &cfg).unwrap();
        let ratio = small.velocity.abs_error / large.velocity.abs_error;
        let expected = std::f64::consts::SQRT_2;
        assert!(
            (ratio / expected - 1.0).abs() < 0.3,
            "SE ratio {ratio} vs √2"
        );
    }

    #[test]
    fn equilibrium_velocity_is_null_across_seeds() {
        // equal temperatures, arbitrary phase: no transport in either mode;
        // |v| < 2·SE must hold for at least 19 of 20 master seeds
        let params = motor(1.0, 0.5, std::f64::consts::FRAC_PI_2, 1.0, 1.0, 1.0);
        let system = SimSystem::Motor {
            params,
            forces: ForceSpec::none(),
        };
        for mode in [Mode::Qmd, Mode::Md] {
            let mut hits = 0;
            for seed in 0..20 {
                let cfg = SimConfig::new(mode, 0.05, 1 << 12, 12, seed);
                let v = run_ensemble(&system, &cfg).unwrap().velocity;
                if v.value.abs() < 2.0 * v.abs_error {
                    hits += 1;
                }
            }
            assert!(hits >= 19, "{mode:?}: only {hits}/20 seeds consistent with zero");
        }
    }

    #[test]
    fn halving_dt_leaves_velocity_unchanged() {
        let params = motor(1.0, 0.5, std::f64::consts::FRAC_PI_2, 1.0, 2.5, 1.0);
        let system = SimSystem::Motor {
            params,
            forces: ForceSpec::none(),
        };
        let coarse = run_ensemble(&system, &SimConfig::new(Mode::Qmd, 0.06, 1 << 14, 256, 40)).unwrap();
        let fine = run_ensemble(&system, &SimConfig::new(Mode::Qmd, 0.03, 1 << 15, 256, 41)).unwrap();
        let (vc, vf) = (&coarse.velocity, &fine.velocity);
        let combined = (vc.abs_error.powi(2) + vf.abs_error.powi(2)).sqrt();
        assert!(
            (vc.value - vf.value).abs() < combined,
            "dt=0.06: {} ± {}, dt=0.03: {} ± {}",
            vc.value,
            vc.abs_error,
            vf.value,
            vf.abs_error
        );
    }

    #[test]
    fn classical_equipartition_per_particle() {
        let params = motor(1.0, 1.0, 0.0, 1.5, 1.5, 0.0);
        let cfg = SimConfig::new(Mode::Md, 0.05, 1 << 14, 24, 101);
        let out = run_ensemble(
            &SimSystem::Motor {
                params,
                forces: ForceSpec::none(),
            },
            &cfg,
        )
        .unwrap();
        for (i, &(ke, se)) in out.kinetic_energy.iter().enumerate() {
            let target = 1.5 / 2.0;
            assert!(
                (ke - target).abs() < 3.0 * se,
                "particle {i}: ⟨P²/2m⟩ = {ke} ± {se} vs {target}"
            );
        }
    }

    #[test]
    fn thermal_start_shortens_transient_and_runs() {
        let params = motor(1.0, 0.5, std::f64::consts::FRAC_PI_2, 1.0, 2.5, 1.0);
        let mut cfg = SimConfig::new(Mode::Qmd, 0.05, 1 << 11, 4, 7);
        cfg.initial_conditions = InitialConditions::Thermal;
        let out = run_ensemble(
            &SimSystem::Motor {
                params,
                forces: ForceSpec::none(),
            },
            &cfg,
        )
        .unwrap();
        assert_eq!(out.per_traj_slopes.len(), 4);
        // thermal momenta actually differ from the origin start
        let mut origin_cfg = cfg;
        origin_cfg.initial_conditions = InitialConditions::Origin;
        let origin = run_ensemble(
            &SimSystem::Motor {
                params,
                forces: ForceSpec::none(),
            },
            &origin_cfg,
        )
        .unwrap();
        assert_ne!(out.velocity.value.to_bits(), origin.velocity.value.to_bits());
    }

    #[test]
    fn invalid_plans_are_rejected() {
        let params = motor(1.0, 0.5, 0.0, 1.0, 2.5, 1.0);
        let system = SimSystem::Motor {
            params,
            forces: ForceSpec::none(),
        };
        // dt too large for ω_max = √(2k + V0) ≈ 1.58
        assert!(run_ensemble(&system, &SimConfig::new(Mode::Qmd, 0.08, 1 << 12, 4, 1)).is_err());
        // n_steps not a power of two / too short
        assert!(run_ensemble(&system, &SimConfig::new(Mode::Qmd, 0.05, 5000, 4, 1)).is_err());
        assert!(run_ensemble(&system, &SimConfig::new(Mode::Qmd, 0.05, 512, 4, 1)).is_err());
        // ensembles need at least two trajectories
        assert!(run_ensemble(&system, &SimConfig::new(Mode::Qmd, 0.05, 1 << 12, 1, 1)).is_err());
        // estimator window out of range
        let mut cfg = SimConfig::new(Mode::Qmd, 0.05, 1 << 12, 4, 1);
        cfg.estimator_window = 0.0;
        assert!(run_ensemble(&system, &cfg).is_err());
        // non-Ohmic cutoff unsupported in trajectories
        let soft = BathSpec::new(1.0, CutoffKind::SoftLorentzian(10.0), 1.0, 1.0).unwrap();
        let bad = MotorParams::new(1.0, 1.0, 1.0, 0.5, 0.0, soft, soft).unwrap();
        assert!(matches!(
            run_ensemble(
                &SimSystem::Motor {
                    params: bad,
                    forces: ForceSpec::none()
                },
                &SimConfig::new(Mode::Qmd, 0.01, 1 << 12, 4, 1)
            ),
            Err(MotorError::Unsupported(_))
        ));
    }
}
