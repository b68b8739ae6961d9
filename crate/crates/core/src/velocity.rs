//! Second-order steady-state velocity of the motor center of mass, for the
//! free motor, externally forced motor, and single-particle reduction.
//!
//! The free-motor velocity is `v = V₀² b sinφ · 𝓘 / (2 η̃(0))` with
//!
//! `𝓘 = (1/4) ∫₀^∞ dτ (Gx−Gy)(τ) · K12(τ) · (e^{−c12/2} − e^{−c21/2})`,
//!
//! `K12 = b² sin(a12)/a12` (→ `b²` as `a12 → 0`). Under constant forces the
//! zeroth-order drift `(F̄₁+F̄₂)/(2η̃(0))` adds a linearly growing phase to
//! the center of mass and a constant offset `b(F̄₁−F̄₂)/(2k)` to the relative
//! coordinate, and the correction integral gains a self term weighted by
//! `sin(a11)/a11` and the single-particle displacement exponents:
//!
//! `𝓘_F = (1/8) ∫ dσ { (Gx+Gy)·K11·(e^{−c11/2}+e^{−c22/2})·sin(Δx(σ))
//!                   + (Gx−Gy)·K12·sin(Δx(σ)−Δy+φ)·(e^{−c12/2}−e^{−c21/2}) }`
//!
//! with `Δx(σ) = −b(F̄₁+F̄₂)σ/(2η̃(0))`, `Δy = b(F̄₁−F̄₂)/(2k)`, and total
//! velocity `v_F = (F̄₁+F̄₂)/(2η̃(0)) + V₀² b 𝓘_F / η̃(0)`. At zero force
//! the self term vanishes pointwise and `𝓘_F = ½ sinφ·𝓘` recovers the free
//! result exactly.
//!
//! The τ-integrals run over the kernel-table grid with a 15-point
//! Gauss–Kronrod rule per panel; the reported error combines the rule's own
//! estimate, a grid-decimation (Richardson) estimate of the interpolation
//! error, the propagated kernel-quadrature error, and a bound on the
//! truncated tail.

use crate::bath::{BathSpec, MotorParams};
use crate::correlators::{
    build_table_with, default_tau_max, recommended_n_points, CorrelatorTable, KernelCurves,
    KernelSettings,
};
use crate::error::{MotorError, Result};
use crate::greens::TimeGreens;
use crate::vquad::gk15_vec;
use crate::Fnv1a;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// How a velocity estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Deterministic kernel quadrature.
    Quadrature,
    /// Quantum-noise Langevin simulation.
    Qmd,
    /// Classical white-noise Langevin simulation.
    Md,
}

/// Constant external forces on the two particles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceSpec {
    pub f1: f64,
    pub f2: f64,
}

impl ForceSpec {
    pub fn equal(f: f64) -> Self {
        ForceSpec { f1: f, f2: f }
    }

    pub fn none() -> Self {
        ForceSpec::equal(0.0)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.f1.is_finite() && self.f2.is_finite() {
            Ok(())
        } else {
            Err(MotorError::InvalidParams(format!(
                "forces must be finite, got ({}, {})",
                self.f1, self.f2
            )))
        }
    }
}

/// Numerical provenance attached to a quadrature estimate.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// End of the integration window.
    pub tau_max: f64,
    /// Number of τ-grid nodes.
    pub n_tau: usize,
    /// Bound on the neglected `τ > tau_max` contribution relative to the
    /// integral magnitude.
    pub tail_fraction: f64,
    /// Propagated kernel-quadrature error (velocity units).
    pub kernel_error: f64,
    /// Grid-decimation estimate of the interpolation error (velocity units).
    pub interp_error: f64,
    /// `V0` is within the perturbative window (small against every positive
    /// energy scale among `k_B T_i`, `k/b²`, `ħ√(k/m)`).
    pub perturbative_ok: bool,
}

/// A velocity value with its uncertainty and provenance.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VelocityEstimate {
    pub value: f64,
    pub abs_error: f64,
    pub method: Method,
    pub params_fingerprint: u64,
    pub diagnostics: Diagnostics,
}

/// Accuracy/effort knobs of the velocity quadrature.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSettings {
    /// Relative tolerance of the underlying kernel integrals.
    pub kernel_rel_tol: f64,
    /// Multiplier on the recommended τ-grid point count.
    pub grid_scale: f64,
    /// Integration window override. `None` uses the displacement-envelope
    /// rule and lets the tail detector widen the window automatically when
    /// the integrand has not decayed; an explicit value is strict and fails
    /// with [`MotorError::TauTruncation`] instead.
    pub tau_max: Option<f64>,
    /// Grid size override.
    pub n_points: Option<usize>,
    /// Largest acceptable truncated-tail fraction.
    pub max_tail_fraction: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            kernel_rel_tol: 1e-9,
            grid_scale: 1.0,
            tau_max: None,
            n_points: None,
            max_tail_fraction: 1e-6,
        }
    }
}

impl QuadratureSettings {
    /// Cheaper settings for dense parameter sweeps (~3 fewer digits).
    pub fn fast() -> Self {
        QuadratureSettings {
            kernel_rel_tol: 1e-7,
            grid_scale: 0.65,
            max_tail_fraction: 1e-4,
            ..QuadratureSettings::default()
        }
    }

    /// Same target with all tolerances halved and a denser grid, for
    /// self-consistency checks.
    pub fn refined(&self) -> Self {
        QuadratureSettings {
            kernel_rel_tol: 0.5 * self.kernel_rel_tol,
            grid_scale: 1.4 * self.grid_scale,
            ..*self
        }
    }

    fn kernel(&self) -> KernelSettings {
        KernelSettings {
            rel_tol: self.kernel_rel_tol,
            ..KernelSettings::default()
        }
    }
}

/// `sin(a)/(a/b²)` with the removable limit `b²` at `a → 0`.
#[inline]
fn sin_ratio(a: f64, b2: f64) -> f64 {
    if a.abs() < 1e-6 {
        b2 * (1.0 - a * a / 6.0)
    } else {
        b2 * a.sin() / a
    }
}

/// `e^{−c12/2} − e^{−c21/2}` evaluated as `−2 e^{−p/2} sinh(q/2)`: exact
/// zero at equilibrium (`q = 0`) and free of subtractive cancellation.
#[inline]
fn exp_diff(p: f64, q: f64) -> f64 {
    -2.0 * (-0.5 * p).exp() * (0.5 * q).sinh()
}

/// Exact `sin φ` that is literal zero whenever `φ` is a floating-point
/// multiple of π (the velocity vanishes identically there).
fn exact_sin(phi: f64) -> f64 {
    let l = (phi / PI).round();
    if phi == l * PI {
        0.0
    } else {
        phi.sin()
    }
}

fn perturbative_ok(params: &MotorParams) -> bool {
    let quantum = params.bath1.hbar * (params.k / params.m).sqrt();
    let scales = [
        params.bath1.temperature,
        params.bath2.temperature,
        params.k / (params.b * params.b),
        quantum,
    ];
    let mut bound = f64::INFINITY;
    for s in scales {
        if s > 0.0 {
            bound = bound.min(s);
        }
    }
    !bound.is_finite() || params.v0 <= 0.5 * bound
}

struct TauIntegral {
    value: f64,
    gk_error: f64,
    interp_error: f64,
    /// `∂(integral)/∂(kernel)` magnitude: multiply by the kernel error.
    sensitivity: f64,
    tail_bound: f64,
    tail_fraction: f64,
}

/// Integrate `f` (plus its kernel-sensitivity channel) over consecutive
/// node pairs of `grid`, subdividing each panel so an external drift phase
/// advances at most ~1.5 rad per Gauss–Kronrod application.
fn integrate_panels<F: Fn(f64) -> [f64; 2]>(
    f: &F,
    grid: &[f64],
    stride: usize,
    drift_rate: f64,
) -> (f64, f64, f64) {
    let (mut value, mut err, mut sens) = (0.0, 0.0, 0.0);
    let mut i = 0;
    while i + 1 < grid.len() {
        let j = (i + stride).min(grid.len() - 1);
        let (lo, hi) = (grid[i], grid[j]);
        let n_sub = (1.0 + drift_rate.abs() * (hi - lo) / 1.5).min(20_000.0) as usize;
        let h = (hi - lo) / n_sub as f64;
        for s in 0..n_sub {
            let (v, e) = gk15_vec(f, lo + s as f64 * h, lo + (s + 1) as f64 * h);
            value += v[0];
            err += e[0];
            sens += v[1].abs() + e[1];
        }
        i = j;
    }
    (value, err, sens)
}

/// Envelope-based tail treatment shared by the free and forced integrals:
/// enforces the truncation rule (envelope below `1e-10` of the integral on
/// the last three panels), bounds the remainder by fitting the terminal
/// decay rate, and reports the tail fraction.
fn tail_check(
    grid: &[f64],
    envelope: &[f64],
    integral: f64,
    max_tail_fraction: f64,
) -> Result<(f64, f64)> {
    let n = grid.len();
    let scale = integral.abs();
    let threshold = 1e-10 * scale;
    let last_env = envelope[n - 1];
    let violated = envelope[n.saturating_sub(3)..]
        .iter()
        .any(|e| *e > threshold);

    // terminal log-slope from the last nodes with positive envelope
    let mut pts: Vec<(f64, f64)> = (n.saturating_sub(8)..n)
        .filter(|&i| envelope[i] > 0.0)
        .map(|i| (grid[i], envelope[i].ln()))
        .collect();
    let lambda = if pts.len() >= 2 {
        let m = pts.len() as f64;
        let (sx, sy): (f64, f64) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let (mx, my) = (sx / m, sy / m);
        let (num, den) = pts
            .iter()
            .fold((0.0, 0.0), |a, p| {
                (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx) * (p.0 - mx))
            });
        if den > 0.0 {
            -(num / den)
        } else {
            0.0
        }
    } else {
        f64::INFINITY // envelope underflowed to zero: no tail left
    };
    pts.clear();

    let tau_max = grid[n - 1];
    if violated || lambda <= 0.0 {
        let suggested = if lambda > 0.0 && last_env > 0.0 && threshold > 0.0 {
            tau_max + (last_env / threshold).ln() / lambda + 5.0 / lambda
        } else {
            2.0 * tau_max
        };
        return Err(MotorError::TauTruncation {
            tau_max,
            envelope: last_env,
            suggested,
        });
    }
    let tail_bound = if last_env > 0.0 { last_env / lambda } else { 0.0 };
    let tail_fraction = if scale > 0.0 {
        tail_bound / scale
    } else if tail_bound > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    if tail_fraction > max_tail_fraction {
        return Err(MotorError::TauTruncation {
            tau_max,
            envelope: last_env,
            suggested: tau_max + (tail_fraction / max_tail_fraction).ln().max(1.0) / lambda,
        });
    }
    Ok((tail_bound, tail_fraction))
}

fn free_integral(
    table: &CorrelatorTable,
    params: &MotorParams,
    max_tail_fraction: f64,
) -> Result<TauIntegral> {
    if table.cross_divergent {
        // Gx − Gy ≡ 0 at k = 0: the integral vanishes identically
        return Ok(TauIntegral {
            value: 0.0,
            gk_error: 0.0,
            interp_error: 0.0,
            sensitivity: 0.0,
            tail_bound: 0.0,
            tail_fraction: 0.0,
        });
    }
    let greens = TimeGreens::build(params, &table.tau_grid)?;
    let b2 = params.b * params.b;
    let fine = KernelCurves::new(table)?;
    let coarse = KernelCurves::from_stride(table, 2)?;

    let make = |c: KernelCurves| {
        let greens = &greens;
        move |tau: f64| -> [f64; 2] {
            let a = c.a12.eval(tau);
            let p = c.p.as_ref().expect("cross kernels present").eval(tau);
            let q = c.q.as_ref().expect("cross kernels present").eval(tau);
            let dg = greens.diff(tau);
            let core = 0.25 * dg * sin_ratio(a, b2);
            // sensitivity to absolute kernel errors: |∂f/∂q| dominates,
            // |∂f/∂p| = |f|/2, |∂f/∂a12| ≤ |core|·|exp_diff|·a/3
            let damp = (-0.5 * p).exp();
            let sens = core.abs() * damp * ((0.5 * q).cosh() + (0.5 * q).sinh().abs());
            [core * exp_diff(p, q), sens]
        }
    };
    let f_fine = make(fine);
    let (value, gk_error, sensitivity) = integrate_panels(&f_fine, &table.tau_grid, 1, 0.0);
    let (coarse_value, _, _) = integrate_panels(&make(coarse), &table.tau_grid, 2, 0.0);
    // monotone-cubic interpolation converges as h³: Richardson factor 2³−1
    let interp_error = (value - coarse_value).abs() / 7.0;

    let envelope: Vec<f64> = table
        .tau_grid
        .iter()
        .enumerate()
        .map(|(i, &tau)| {
            0.25 * greens.diff(tau).abs()
                * b2
                * exp_diff(table.p_sym[i], table.q_anti[i]).abs()
        })
        .collect();
    let (tail_bound, tail_fraction) =
        tail_check(&table.tau_grid, &envelope, value, max_tail_fraction)?;

    Ok(TauIntegral {
        value,
        gk_error,
        interp_error,
        sensitivity,
        tail_bound,
        tail_fraction,
    })
}

/// The dimensionless velocity integral `𝓘` from a prebuilt kernel table.
pub fn velocity_integral_i(table: &CorrelatorTable, params: &MotorParams) -> Result<f64> {
    if !table.matches(params) {
        return Err(MotorError::Cache(
            "kernel table does not match the requested parameters".into(),
        ));
    }
    free_integral(table, params, QuadratureSettings::default().max_tail_fraction)
        .map(|i| i.value)
}

fn build_table_for(
    params: &MotorParams,
    settings: &QuadratureSettings,
) -> Result<CorrelatorTable> {
    let tau_max = settings.tau_max.unwrap_or_else(|| default_tau_max(params));
    let n_points = settings.n_points.unwrap_or_else(|| {
        let n = recommended_n_points(params, tau_max) as f64 * settings.grid_scale;
        (n.round() as usize).clamp(64, 40_000)
    });
    build_table_with(params, tau_max, n_points, settings.kernel())
}

/// Build the table and integrate, widening the default window (at most
/// three times) when the tail detector reports truncation. The
/// displacement-envelope default cannot anticipate how deeply a nearly
/// cancelled integral must be resolved — near-degenerate regimes (e.g.
/// very weak coupling, where `𝓘 ~ e^{−O(1)/k}`) need the window the
/// detector itself computes. Explicitly pinned windows are never widened.
fn integrate_with_window<F>(
    params: &MotorParams,
    settings: &QuadratureSettings,
    integral_of: F,
) -> Result<(CorrelatorTable, TauIntegral)>
where
    F: Fn(&CorrelatorTable) -> Result<TauIntegral>,
{
    let mut local = *settings;
    let pinned = local.tau_max.is_some();
    let mut attempts = 0;
    loop {
        let table = build_table_for(params, &local)?;
        match integral_of(&table) {
            Err(MotorError::TauTruncation {
                tau_max, suggested, ..
            }) if !pinned && attempts < 3 => {
                attempts += 1;
                local.tau_max = Some(1.15 * suggested.max(tau_max));
            }
            other => return other.map(|integral| (table, integral)),
        }
    }
}

fn assemble(
    params: &MotorParams,
    fingerprint: u64,
    table: &CorrelatorTable,
    integral: &TauIntegral,
    prefactor: f64,
    drift: f64,
) -> VelocityEstimate {
    let scale = prefactor.abs();
    VelocityEstimate {
        value: drift + prefactor * integral.value,
        abs_error: scale
            * (integral.gk_error
                + integral.interp_error
                + integral.sensitivity * table.max_quad_error
                + integral.tail_bound),
        method: Method::Quadrature,
        params_fingerprint: fingerprint,
        diagnostics: Diagnostics {
            tau_max: *table.tau_grid.last().unwrap_or(&0.0),
            n_tau: table.tau_grid.len(),
            tail_fraction: integral.tail_fraction,
            kernel_error: scale * integral.sensitivity * table.max_quad_error,
            interp_error: scale * integral.interp_error,
            perturbative_ok: perturbative_ok(params),
        },
    }
}

fn zero_estimate(params: &MotorParams, fingerprint: u64) -> VelocityEstimate {
    VelocityEstimate {
        value: 0.0,
        abs_error: 0.0,
        method: Method::Quadrature,
        params_fingerprint: fingerprint,
        diagnostics: Diagnostics {
            perturbative_ok: perturbative_ok(params),
            ..Diagnostics::default()
        },
    }
}

/// Free-motor steady velocity `V₀² b sinφ 𝓘 / (2η̃(0))` at default accuracy.
pub fn steady_velocity(params: &MotorParams) -> Result<VelocityEstimate> {
    steady_velocity_with(params, &QuadratureSettings::default())
}

pub fn steady_velocity_with(
    params: &MotorParams,
    settings: &QuadratureSettings,
) -> Result<VelocityEstimate> {
    params.validate()?;
    let fingerprint = params.fingerprint();
    let sin_phi = exact_sin(params.phi);
    if params.v0 == 0.0 || sin_phi == 0.0 || params.k == 0.0 {
        // exact zeros: V₀² prefactor, sinφ factorization, or Gx ≡ Gy
        return Ok(zero_estimate(params, fingerprint));
    }
    let (table, integral) = integrate_with_window(params, settings, |table| {
        free_integral(table, params, settings.max_tail_fraction)
    })?;
    let pref = params.v0 * params.v0 * params.b * sin_phi / (2.0 * params.eta_tilde0());
    Ok(assemble(params, fingerprint, &table, &integral, pref, 0.0))
}

/// Same velocity with both baths forced classical (`ħ = 0` kernels,
/// `sin(a)/A → b²`).
pub fn classical_velocity(params: &MotorParams) -> Result<VelocityEstimate> {
    classical_velocity_with(params, &QuadratureSettings::default())
}

pub fn classical_velocity_with(
    params: &MotorParams,
    settings: &QuadratureSettings,
) -> Result<VelocityEstimate> {
    steady_velocity_with(&params.classical(), settings)
}

pub(crate) fn force_fingerprint(params: &MotorParams, forces: &ForceSpec) -> u64 {
    let mut h = Fnv1a::new();
    h.write_u64(params.fingerprint());
    h.write_f64(forces.f1);
    h.write_f64(forces.f2);
    h.finish()
}

fn forced_integral(
    table: &CorrelatorTable,
    params: &MotorParams,
    forces: &ForceSpec,
    max_tail_fraction: f64,
) -> Result<TauIntegral> {
    let greens = TimeGreens::build(params, &table.tau_grid)?;
    let b2 = params.b * params.b;
    let eta0 = params.eta_tilde0();
    let rate = params.b * (forces.f1 + forces.f2) / (2.0 * eta0);
    let delta_y = if table.cross_divergent {
        0.0 // enters only through the (Gx−Gy) term, absent at k = 0
    } else {
        params.b * (forces.f1 - forces.f2) / (2.0 * params.k)
    };
    let phi = params.phi;
    let fine = KernelCurves::new(table)?;
    let coarse = KernelCurves::from_stride(table, 2)?;

    let make = |c: KernelCurves| {
        let greens = &greens;
        let cross = !table.cross_divergent;
        move |tau: f64| -> [f64; 2] {
            let a11 = c.a11.eval(tau);
            let (e11, e22) = ((-0.5 * c.c11.eval(tau)).exp(), (-0.5 * c.c22.eval(tau)).exp());
            let self_core = 0.125 * greens.sum(tau) * sin_ratio(a11, b2);
            let drift_phase = -rate * tau;
            let mut value = self_core * (e11 + e22) * drift_phase.sin();
            let mut sens = 0.5 * self_core.abs() * (e11 + e22);
            if cross {
                let a12 = c.a12.eval(tau);
                let p = c.p.as_ref().expect("cross kernels present").eval(tau);
                let q = c.q.as_ref().expect("cross kernels present").eval(tau);
                let cross_core = 0.125 * greens.diff(tau) * sin_ratio(a12, b2);
                value += cross_core * (drift_phase - delta_y + phi).sin() * exp_diff(p, q);
                sens += cross_core.abs()
                    * (-0.5 * p).exp()
                    * ((0.5 * q).cosh() + (0.5 * q).sinh().abs());
            }
            [value, sens]
        }
    };
    let f_fine = make(fine);
    let (value, gk_error, sensitivity) = integrate_panels(&f_fine, &table.tau_grid, 1, rate);
    let (coarse_value, _, _) = integrate_panels(&make(coarse), &table.tau_grid, 2, rate);
    let interp_error = (value - coarse_value).abs() / 7.0;

    let envelope: Vec<f64> = table
        .tau_grid
        .iter()
        .enumerate()
        .map(|(i, &tau)| {
            let self_env = 0.125
                * greens.sum(tau).abs()
                * b2
                * ((-0.5 * table.c11[i]).exp() + (-0.5 * table.c22[i]).exp());
            let cross_env = if table.cross_divergent {
                0.0
            } else {
                0.125
                    * greens.diff(tau).abs()
                    * b2
                    * exp_diff(table.p_sym[i], table.q_anti[i]).abs()
            };
            self_env + cross_env
        })
        .collect();
    let (tail_bound, tail_fraction) =
        tail_check(&table.tau_grid, &envelope, value, max_tail_fraction)?;

    Ok(TauIntegral {
        value,
        gk_error,
        interp_error,
        sensitivity,
        tail_bound,
        tail_fraction,
    })
}

/// Total forced-motor velocity: zeroth-order drift plus the second-order
/// correction `V₀² b 𝓘_F / η̃(0)`.
pub fn forced_velocity(params: &MotorParams, forces: &ForceSpec) -> Result<VelocityEstimate> {
    forced_velocity_with(params, forces, &QuadratureSettings::default())
}

pub fn forced_velocity_with(
    params: &MotorParams,
    forces: &ForceSpec,
    settings: &QuadratureSettings,
) -> Result<VelocityEstimate> {
    params.validate()?;
    forces.validate()?;
    let fingerprint = force_fingerprint(params, forces);
    let eta0 = params.eta_tilde0();
    let drift = (forces.f1 + forces.f2) / (2.0 * eta0);
    if params.k == 0.0 && forces.f1 != forces.f2 {
        // with unequal forces the relative coordinate drifts without bound
        // and the stationary-offset form of the correction does not apply
        return Err(MotorError::Unsupported(
            "k = 0 with unequal forces: the relative coordinate is non-stationary".into(),
        ));
    }
    if params.v0 == 0.0 {
        let mut est = zero_estimate(params, fingerprint);
        est.value = drift;
        return Ok(est);
    }
    let (table, integral) = integrate_with_window(params, settings, |table| {
        forced_integral(table, params, forces, settings.max_tail_fraction)
    })?;
    let pref = params.v0 * params.v0 * params.b / eta0;
    Ok(assemble(params, fingerprint, &table, &integral, pref, drift))
}

/// Extracted power `Ẇ = −F̄ · v_F` for equal forces `F̄` on both particles.
pub fn output_work_rate(params: &MotorParams, forces: &ForceSpec) -> Result<f64> {
    if forces.f1 != forces.f2 {
        return Err(MotorError::Unsupported(
            "work rate is defined for equal forces on both particles".into(),
        ));
    }
    Ok(-forces.f1 * forced_velocity(params, forces)?.value)
}

/// Drift velocity of a single particle in a tilted periodic potential:
/// the `k = 0`, equal-bath reduction of the forced motor.
pub fn single_particle_velocity(
    bath: &BathSpec,
    m: f64,
    b: f64,
    v0: f64,
    force: f64,
) -> Result<VelocityEstimate> {
    single_particle_velocity_with(bath, m, b, v0, force, &QuadratureSettings::default())
}

pub fn single_particle_velocity_with(
    bath: &BathSpec,
    m: f64,
    b: f64,
    v0: f64,
    force: f64,
    settings: &QuadratureSettings,
) -> Result<VelocityEstimate> {
    let params = MotorParams::new(m, 0.0, b, v0, 0.0, *bath, *bath)?;
    forced_velocity_with(&params, &ForceSpec::equal(force), settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::CutoffKind;
    use approx::assert_relative_eq;

    fn motor(k: f64, cutoff: CutoffKind, t1: f64, t2: f64, hbar: f64, v0: f64) -> MotorParams {
        let b1 = BathSpec::new(1.0, cutoff, t1, hbar).unwrap();
        let b2 = BathSpec::new(1.0, cutoff, t2, hbar).unwrap();
        MotorParams::new(1.0, k, 1.0, v0, std::f64::consts::FRAC_PI_2, b1, b2).unwrap()
    }

    fn integral_of(params: &MotorParams) -> (f64, VelocityEstimate) {
        let est = steady_velocity(params).unwrap();
        let pref = params.v0 * params.v0 * params.b * exact_sin(params.phi)
            / (2.0 * params.eta_tilde0());
        (est.value / pref, est)
    }

    #[test]
    fn ohmic_velocity_integral_matches_references() {
        // 10-digit references from independent oscillatory quadrature of the
        // full double integral
        for (k, expect) in [
            (0.3, 4.2958451551e-02),
            (1.0, 8.8815863276e-02),
            (3.0, 4.4914256016e-02),
        ] {
            let p = motor(k, CutoffKind::Ohmic, 1.0, 2.5, 1.0, 0.5);
            let (i, est) = integral_of(&p);
            assert_relative_eq!(i, expect, max_relative = 2e-6);
            assert!(est.abs_error < 1e-5 * est.value.abs() + 1e-12);
            assert!(est.diagnostics.tail_fraction < 1e-6);
        }
    }

    #[test]
    fn classical_velocity_integral_matches_reference() {
        let p = motor(1.0, CutoffKind::Ohmic, 1.0, 2.5, 1.0, 0.5);
        let est = classical_velocity(&p).unwrap();
        let pref = 0.25 * 1.0 * 1.0 / 2.0;
        assert_relative_eq!(est.value / pref, 9.4216546061e-02, max_relative = 2e-6);
    }

    #[test]
    fn soft_lorentzian_velocity_matches_reference() {
        // reference from an independent two-stage quadrature (trusted ~1e-4)
        let p = motor(1.0, CutoffKind::SoftLorentzian(10.0), 1.0, 2.5, 1.0, 0.5);
        let est = steady_velocity(&p).unwrap();
        assert_relative_eq!(est.value, 1.11318304e-02, max_relative = 3e-4);
    }

    #[test]
    fn low_temperature_integrals_match_references() {
        // θ = 0.01 regime (T1 = 0.01, T2 = 0.025): quantum and classical
        for (k, qm, cl) in [
            (0.5, 1.89576063e-01, 4.21546542e-01),
            (1.0, 9.93748874e-02, 2.12421716e-01),
        ] {
            let p = motor(k, CutoffKind::Ohmic, 0.01, 0.025, 1.0, 0.005);
            let (i, _) = integral_of(&p);
            assert_relative_eq!(i, qm, max_relative = 5e-6);
            let (ic, _) = integral_of(&p.classical());
            assert_relative_eq!(ic, cl, max_relative = 5e-6);
        }
    }

    #[test]
    fn equilibrium_velocity_is_exactly_zero() {
        let p = motor(1.0, CutoffKind::Ohmic, 1.7, 1.7, 1.0, 0.5);
        let est = steady_velocity(&p).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn phase_multiples_of_pi_give_literal_zero() {
        for phi in [0.0, PI, -PI, 2.0 * PI] {
            let mut p = motor(1.0, CutoffKind::Ohmic, 1.0, 2.5, 1.0, 0.5);
            p.phi = phi;
            let est = steady_velocity(&p).unwrap();
            assert_eq!(est.value, 0.0);
            assert_eq!(est.abs_error, 0.0);
        }
    }

    #[test]
    fn sin_phi_factorization_is_exact() {
        let fast = QuadratureSettings {
            tau_max: Some(40.0),
            n_points: Some(256),
            ..QuadratureSettings::default()
        };
        let mut p = motor(1.0, CutoffKind::Ohmic, 1.0, 2.5, 1.0, 0.5);
        let v_half_pi = steady_velocity_with(&p, &fast).unwrap().value;
        for phi in [0.3, 1.1, 2.8, -0.7] {
            p.phi = phi;
            let v = steady_velocity_with(&p, &fast).unwrap().value;
            assert_relative_eq!(v / phi.sin(), v_half_pi, max_relative = 1e-12);
        }
        // opposite phases: equal magnitude, opposite sign
        p.phi = -std::f64::consts::FRAC_PI_2;
        let v_neg = steady_velocity_with(&p, &fast).unwrap().value;
        assert_relative_eq!(v_neg, -v_half_pi, max_relative = 1e-14);
    }

    #[test]
    fn uncoupled_motor_velocity_is_exactly_zero() {
        let p = motor(0.0, CutoffKind::Ohmic, 1.0, 2.5, 1.0, 0.5);
        let est = steady_velocity(&p).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.abs_error, 0.0);
    }

    #[test]
    fn velocity_scales_exactly_as_v0_squared() {
        let fast = QuadratureSettings {
            tau_max: Some(40.0),
            n_points: Some(256),
            ..QuadratureSettings::default()
        };
        let p1 = motor(1.0, CutoffKind::Ohmic, 1.0, 2.5, 1.0, 0.2);
        let p2 = motor(1.0, CutoffKind::Ohmic, 1.0, 2.5, 1.0, 0.4);
        let v1 = steady_velocity_with(&p1, &fast).unwrap().value;
        let v2 = steady_velocity_with(&p2, &fast).unwrap().value;
        assert_relative_eq!(v2, 4.0 * v1, max_relative = 1e-13);
    }

    #[test]
    fn quadrature_self_consistency_under_refinement() {
        let p = motor(1.0, CutoffKind::Ohmic, 1.0, 2.5, 1.0, 0.5);
        let base = QuadratureSettings::default();
        let v0 = steady_velocity_with(&p, &base).unwrap();
        let v1 = steady_velocity_with(&p, &base.refined()).unwrap();
        assert!(
            (v0.value - v1.value).abs() < 5.0 * v0.abs_error.max(1e-300),
            "refinement moved the value by {} vs reported error {}",
            (v0.value - v1.value).abs(),
            v0.abs_error
        );
    }

    #[test]
    fn forced_velocity_at_zero_force_reduces_to_steady() {
        let fast = QuadratureSettings {
            tau_max: Some(30.0),
            n_points: Some(220),
            ..QuadratureSettings::default()
        };
        let p = motor(1.0, CutoffKind::Ohmic, 1.0, 2.5, 1.0, 0.3);
        let steady = steady_velocity_with(&p, &fast).unwrap().value;
        let forced = forced_velocity_with(&p, &ForceSpec::none(), &fast)
            .unwrap()
            .value;
        assert_relative_eq!(forced, steady, max_relative = 1e-12);
    }

    #[test]
    fn single_particle_forced_velocities_match_references() {
        // 10-digit references from independent quadrature of the k = 0
        // reduction (V0 = T = 0.1, ħ = m = η₀ = 1)
        let bath = BathSpec::new(1.0, CutoffKind::Ohmic, 0.1, 1.0).unwrap();
        for (force, expect) in [
            (0.1, 8.2599737208e-02),
            (0.2, 1.8607834204e-01),
            (0.4, 3.9191745782e-01),
        ] {
            let est = single_particle_velocity(&bath, 1.0, 1.0, 0.1, force).unwrap();
            assert_relative_eq!(est.value, expect, max_relative = 3e-6);
        }
        // doubled wavenumber
        let est = single_particle_velocity(&bath, 1.0, 2.0, 0.1, 0.2).unwrap();
        assert_relative_eq!(est.value, 1.8881605555e-01, max_relative = 3e-6);
    }

    #[test]
    fn low_temperature_single_particle_quantum_vs_classical() {
        // V0 = T = 0.01, F = 0.2: quantum tunneling-assisted drift differs
        // from the classical one in the 3rd digit
        let bath = BathSpec::new(1.0, CutoffKind::Ohmic, 0.01, 1.0).unwrap();
        let qm = single_particle_velocity(&bath, 1.0, 1.0, 0.01, 0.2).unwrap();
        assert_relative_eq!(qm.value, 1.9986460077e-01, max_relative = 3e-6);
        let cl = single_particle_velocity(&bath.classical(), 1.0, 1.0, 0.01, 0.2).unwrap();
        assert_relative_eq!(cl.value, 1.9975771550e-01, max_relative = 3e-6);
        assert!(qm.value > cl.value);
    }

    #[test]
    fn work_rate_sign_and_contracts() {
        let p = motor(1.0, CutoffKind::Ohmic, 1.0, 2.5, 1.0, 0.3);
        // free motor moves forward; a small opposing force extracts work
        let v_free = steady_velocity(&p).unwrap().value;
        assert!(v_free > 0.0);
        let w = output_work_rate(&p, &ForceSpec::equal(-0.002)).unwrap();
        assert!(w > 0.0, "opposing force should extract work, got {w}");
        // aligned force: work done on the machine
        let w_aligned = output_work_rate(&p, &ForceSpec::equal(0.002)).unwrap();
        assert!(w_aligned < 0.0);
        assert_eq!(output_work_rate(&p, &ForceSpec::none()).unwrap(), 0.0);
        assert!(matches!(
            output_work_rate(&p, &ForceSpec { f1: 0.1, f2: 0.2 }),
            Err(MotorError::Unsupported(_))
        ));
    }

    #[test]
    fn uncoupled_unequal_forces_are_rejected() {
        let p = motor(0.0, CutoffKind::Ohmic, 1.0, 2.5, 1.0, 0.3);
        assert!(matches!(
            forced_velocity(&p, &ForceSpec { f1: 0.1, f2: 0.2 }),
            Err(MotorError::Unsupported(_))
        ));
        // equal forces at k = 0 are the single-particle case and fine
        assert!(forced_velocity(&p, &ForceSpec::equal(0.1)).is_ok());
    }

    #[test]
    fn truncation_is_detected_on_short_windows() {
        let p = motor(1.0, CutoffKind::Ohmic, 1.0, 2.5, 1.0, 0.5);
        let short = QuadratureSettings {
            tau_max: Some(4.0),
            n_points: Some(64),
            ..QuadratureSettings::default()
        };
        match steady_velocity_with(&p, &short) {
            Err(MotorError::TauTruncation { suggested, .. }) => {
                assert!(suggested > 4.0);
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn perturbative_window_flag() {
        let ok = motor(1.0, CutoffKind::Ohmic, 1.0, 2.5, 1.0, 0.3);
        assert!(steady_velocity_with(
            &ok,
            &QuadratureSettings {
                tau_max: Some(40.0),
                n_points: Some(256),
                ..QuadratureSettings::default()
            }
        )
        .unwrap()
        .diagnostics
        .perturbative_ok);
        let big = motor(1.0, CutoffKind::Ohmic, 1.0, 2.5, 1.0, 3.0);
        assert!(!steady_velocity_with(
            &big,
            &QuadratureSettings {
                tau_max: Some(40.0),
                n_points: Some(256),
                ..QuadratureSettings::default()
            }
        )
        .unwrap()
        .diagnostics
        .perturbative_ok);
    }
}
