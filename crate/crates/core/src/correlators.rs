//! Bath correlation kernels entering the second-order velocity.
//!
//! Every kernel is a half-line frequency integral with prefactor `b²/2π`
//! over products of the noise power `N(ω)`, thermal weights `F_{1,2}(ω)`,
//! and response functions:
//!
//! * commutators (odd, `sin ωτ` weight):
//!   `a12 = ∫ N·(ħω/2)·(|G̃x|²−|G̃y|²) sin`,
//!   `a11 = ∫ N·(ħω/2)·(|G̃x|²+|G̃y|²) sin`,
//! * antisymmetric cross weight:
//!   `q = ∫ N·2(F1−F2)·Im(G̃x G̃y*) sin`,
//! * symmetric cross weight: `p = ∫ N·(F1+F2)·[|G̃x|²(1−cos) + |G̃y|²(1+cos)]`,
//! * self mean-square displacements:
//!   `c11 = ∫ N·(1−cos)·[F1(S+2R) + F2(S−2R)]` with `S = |G̃x|²+|G̃y|²`,
//!   `R = Re(G̃x G̃y*)`, and `c22` with the thermal weights swapped.
//!
//! The cross displacements are `c12 = p + q`, `c21 = p − q`; at `k = 0` they
//! diverge (the relative coordinate is free) and are reported as such.
//!
//! All seven integrands share one factor set per frequency, so they are
//! evaluated together by the vector engines ([`crate::vquad`]). Per time
//! point the axis splits into an adaptive head `[0, min(6π/τ, ω_ref)]`
//! (resolving at most three oscillation periods plus all seeded structure),
//! a Filon mid-range, an optional excision window around a sharp `|G̃y|²`
//! resonance, and certified oscillatory/smooth tails. The `1∓cos` weights
//! are split as `DC ∓ cos-transform` beyond the head, with the
//! τ-independent DC part cached incrementally across a whole ascending time
//! grid.

use crate::bath::{fdt_even, MotorParams};
use crate::error::{MotorError, Result};
use crate::interp::Pchip;
use crate::vquad::{
    adaptive_vec, filon_refined_vec, osc_tail_vec, smooth_tail_vec, VQuadResult, VTol, Weight,
};
use crate::Fnv1a;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::f64::consts::PI;

const NK: usize = 7;
const WEIGHTS: [Weight; NK] = [
    Weight::Sin, // a12 integrand
    Weight::Sin, // a11 integrand
    Weight::Sin, // q integrand
    Weight::Cos, // p, x-part (1−cos)
    Weight::Cos, // p, y-part (1+cos)
    Weight::Cos, // c11 (1−cos)
    Weight::Cos, // c22 (1−cos)
];

/// Which particle's self displacement to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Particle {
    One,
    Two,
}

/// Accuracy knobs of the kernel quadrature.
#[derive(Debug, Clone, Copy)]
pub struct KernelSettings {
    /// Relative target per kernel component.
    pub rel_tol: f64,
    /// Absolute floor, as a fraction of the largest component magnitude.
    pub floor: f64,
    /// Subinterval budget of the adaptive head.
    pub max_intervals: usize,
}

impl Default for KernelSettings {
    fn default() -> Self {
        KernelSettings {
            rel_tol: 1e-9,
            floor: 1e-13,
            max_intervals: 3000,
        }
    }
}

/// All kernels at one time lag.
#[derive(Debug, Clone, Copy)]
pub struct KernelPoint {
    pub tau: f64,
    pub a12: f64,
    pub a11: f64,
    /// Symmetric part of the cross displacement (`+∞` when `k = 0`).
    pub p: f64,
    /// Antisymmetric part (temperature-difference driven); 0 when `k = 0`.
    pub q: f64,
    pub c11: f64,
    pub c22: f64,
    /// Largest estimated absolute quadrature error across the components.
    pub quad_error: f64,
}

impl KernelPoint {
    pub fn c12(&self) -> f64 {
        self.p + self.q
    }

    pub fn c21(&self) -> f64 {
        self.p - self.q
    }
}

struct DcCache {
    /// Lower edge the cached DC integrals currently start from.
    base: f64,
    value: [f64; NK],
    error: f64,
}

/// Reusable evaluator of the seven kernel integrals for one parameter set.
pub struct KernelEngine {
    params: MotorParams,
    settings: KernelSettings,
    hbar: f64,
    cross_divergent: bool,
    w_res: f64,
    w_half: f64,
    w_ref: f64,
    seeds: Vec<f64>,
    dc: RefCell<Option<DcCache>>,
}

impl KernelEngine {
    pub fn new(params: &MotorParams, settings: KernelSettings) -> Self {
        let gamma = params.bath1.eta0 / params.m;
        // The |G̃y|² peak sits where mω² − 2k − ω·Im η̃(ω) crosses zero, not
        // at √(2k/m): the bath mass shift displaces it by ≈ Im η̃/(2m),
        // which for sharply cut-off spectra is many half-widths. Newton from
        // the bare resonance converges in a few steps (h' ≈ 2mω dominates).
        let mut w_res = params.omega_y();
        if w_res > 0.0 {
            for _ in 0..4 {
                let h = params.m * w_res * w_res
                    - 2.0 * params.k
                    - w_res * params.eta_tilde(w_res).im;
                let step = h / (2.0 * params.m * w_res);
                w_res -= step;
                if !(w_res > 0.0) || step.abs() <= 1e-13 * w_res {
                    break;
                }
            }
            if !(w_res > 0.0 && w_res.is_finite()) {
                w_res = params.omega_y();
            }
        }
        let w_half = if w_res > 0.0 {
            params.eta_tilde(w_res).re / (2.0 * params.m)
        } else {
            0.0
        };
        let hbar = params.bath1.hbar;
        let w_thermal = if hbar > 0.0 {
            2.0 * params.bath1.temperature.max(params.bath2.temperature) / hbar
        } else {
            0.0
        };
        let lambda = params.bath1.cutoff.lambda();
        let lambda = if lambda.is_finite() { lambda } else { 0.0 };
        let w_ref = 4.0 * w_res.max(gamma).max(w_thermal).max(lambda);

        let mut seeds = vec![gamma, w_thermal, lambda];
        if w_res > 0.0 {
            // knot ladder into the resonance from both sides, wide enough
            // that bisection only ever has to refine locally
            for mult in [1.0, 2.0, 5.0, 10.0, 50.0, 250.0, 1000.0] {
                seeds.push(w_res - mult * w_half);
                seeds.push(w_res + mult * w_half);
            }
            seeds.push(w_res);
        }
        seeds.retain(|s| *s > 0.0 && s.is_finite());

        KernelEngine {
            params: params.clone(),
            settings,
            hbar,
            cross_divergent: params.k == 0.0,
            w_res,
            w_half,
            w_ref,
            seeds,
            dc: RefCell::new(None),
        }
    }

    fn tol(&self) -> VTol {
        VTol::new(self.settings.rel_tol, self.settings.floor)
    }

    /// The seven envelope components at one frequency (no trig weights).
    fn factors(&self, w: f64) -> [f64; NK] {
        let p = &self.params;
        let eta = p.eta_tilde(w);
        let (er, ei) = (eta.re, eta.im);
        let a = p.m * w * w;
        let bq = a - 2.0 * p.k;
        let ar = a - w * ei;
        let br = bq - w * ei;
        let wi = w * er;
        let dx2 = ar * ar + wi * wi; // |denominator of G̃x|²
        let dy2 = br * br + wi * wi;
        let gx2 = 1.0 / dx2;
        let gy2 = 1.0 / dy2;
        let gxy = gx2 * gy2;
        // |G̃x|² − |G̃y|² without subtractive cancellation
        let d2 = -4.0 * p.k * (a - p.k - w * ei) * gxy;
        let re_xy = (ar * br + wi * wi) * gxy;
        let im_xy = 2.0 * p.k * wi * gxy;

        let n = 2.0 * er; // N(ω) = 2 η₀ f(|ω|) = 2 Re η̃(ω)
        let f1 = fdt_even(&p.bath1, w);
        let f2 = fdt_even(&p.bath2, w);
        let hw2 = 0.5 * self.hbar * w;
        let s_sum = gx2 + gy2;

        let cross_on = !self.cross_divergent;
        [
            n * hw2 * d2,
            n * hw2 * s_sum,
            n * 2.0 * (f1 - f2) * im_xy,
            if cross_on { n * (f1 + f2) * gx2 } else { 0.0 },
            if cross_on { n * (f1 + f2) * gy2 } else { 0.0 },
            n * (f1 * (s_sum + 2.0 * re_xy) + f2 * (s_sum - 2.0 * re_xy)),
            n * (f2 * (s_sum + 2.0 * re_xy) + f1 * (s_sum - 2.0 * re_xy)),
        ]
    }

    /// Head integrand: envelope components with their exact trig weights
    /// (`2sin²(ωτ/2)` for `1−cos`, `2cos²` for `1+cos`), safe at small `ωτ`.
    fn weighted(&self, w: f64, tau: f64) -> [f64; NK] {
        let g = self.factors(w);
        let s = (w * tau).sin();
        let half = 0.5 * w * tau;
        let (sh, ch) = half.sin_cos();
        let one_minus = 2.0 * sh * sh;
        let one_plus = 2.0 * ch * ch;
        [
            g[0] * s,
            g[1] * s,
            g[2] * s,
            g[3] * one_minus,
            g[4] * one_plus,
            g[5] * one_minus,
            g[6] * one_minus,
        ]
    }

    /// DC integrals `∫_base^∞ g_i dω`, cached and updated incrementally as
    /// the requested base moves (ascending τ grids move it only downward).
    fn dc_from(&self, base: f64) -> Result<([f64; NK], f64)> {
        let tol = self.tol();
        let mut cache = self.dc.borrow_mut();
        if cache.is_none() {
            let hint = [0.0; NK];
            let far = smooth_tail_vec(&|w| self.factors(w), self.w_ref, tol, &hint)?;
            *cache = Some(DcCache {
                base: self.w_ref,
                value: far.value,
                error: far.error.iter().fold(0.0f64, |m, e| m.max(*e)),
            });
        }
        let cache = cache.as_mut().expect("cache populated above");
        if base != cache.base {
            let (lo, hi, sign) = if base < cache.base {
                (base, cache.base, 1.0)
            } else {
                (cache.base, base, -1.0)
            };
            let inc = adaptive_vec(
                &|w| self.factors(w),
                lo,
                hi,
                &self.seeds,
                tol,
                &cache.value,
                self.settings.max_intervals,
            )?;
            for i in 0..NK {
                cache.value[i] += sign * inc.value[i];
            }
            cache.error += inc.error.iter().fold(0.0f64, |m, e| m.max(*e));
            cache.base = base;
        }
        Ok((cache.value, cache.error))
    }

    /// Trig transforms `∫_split^∞ g_i·{sin,cos}(ωτ) dω` with optional
    /// excision of a sharp resonance onto its own adaptively-integrated
    /// window (composite Filon cannot resolve a peak much narrower than its
    /// panels).
    fn tail_transform(&self, split: f64, tau: f64, hint: &[f64; NK]) -> Result<VQuadResult<NK>> {
        let tol = self.tol();
        let g = |w: f64| self.factors(w);
        let sharp = self.w_res > 1.02 * split && self.w_half < self.w_res / 200.0;
        if !sharp {
            return osc_tail_vec(&g, split, tau, &WEIGHTS, tol, hint);
        }
        let delta = (50.0 * self.w_half)
            .max(self.w_res / 200.0)
            .min(0.5 * self.w_res);
        let l = self.w_res - delta;
        let r = self.w_res + delta;
        let weighted = |w: f64| {
            let gv = g(w);
            let mut out = [0.0; NK];
            let (s, c) = (w * tau).sin_cos();
            for i in 0..NK {
                out[i] = gv[i]
                    * match WEIGHTS[i] {
                        Weight::Sin => s,
                        Weight::Cos => c,
                    };
            }
            out
        };
        let mut acc = VQuadResult {
            value: [0.0; NK],
            error: [0.0; NK],
            evals: 0,
        };
        let win_lo = if l > 1.05 * split {
            // mid-range [split, l]: smooth envelope, many periods → Filon
            let periods = (l - split) * tau / (2.0 * PI);
            let span = if periods <= 3.0 {
                adaptive_vec(&weighted, split, l, &[], tol, hint, 512)?
            } else {
                filon_refined_vec(&g, split, l, tau, &WEIGHTS, tol, hint)
            };
            for i in 0..NK {
                acc.value[i] += span.value[i];
                acc.error[i] += span.error[i];
            }
            acc.evals += span.evals;
            l
        } else {
            split
        };
        let window = adaptive_vec(&weighted, win_lo, r, &self.seeds, tol, hint, 1024)?;
        let beyond = osc_tail_vec(&g, r, tau, &WEIGHTS, tol, hint)?;
        for i in 0..NK {
            acc.value[i] += window.value[i] + beyond.value[i];
            acc.error[i] += window.error[i] + beyond.error[i];
        }
        acc.evals += window.evals + beyond.evals;
        Ok(acc)
    }

    /// Evaluate all kernels at one lag. Grids should be traversed in
    /// ascending τ order so that the DC cache only ever extends downward.
    pub fn eval(&self, tau: f64) -> Result<KernelPoint> {
        if !(tau >= 0.0) {
            return Err(MotorError::InvalidParams(format!(
                "kernel lag must be non-negative, got {tau}"
            )));
        }
        let pref = self.params.b * self.params.b / (2.0 * PI);
        let tol = self.tol();

        if tau == 0.0 {
            // sin and 1−cos weights vanish identically; only the y-part of
            // the symmetric cross weight survives with weight 2
            let (p, err) = if self.cross_divergent {
                (f64::INFINITY, 0.0)
            } else {
                let g4 = |w: f64| [self.factors(w)[4]];
                let head = adaptive_vec(
                    &g4,
                    0.0,
                    self.w_ref,
                    &self.seeds,
                    tol,
                    &[0.0],
                    self.settings.max_intervals,
                )?;
                let tail = smooth_tail_vec(&g4, self.w_ref, tol, &head.value)?;
                (
                    2.0 * pref * (head.value[0] + tail.value[0]),
                    2.0 * pref * (head.error[0] + tail.error[0]),
                )
            };
            return Ok(KernelPoint {
                tau,
                a12: 0.0,
                a11: 0.0,
                p,
                q: 0.0,
                c11: 0.0,
                c22: 0.0,
                quad_error: err,
            });
        }

        let split = (6.0 * PI / tau).min(self.w_ref);
        let head = adaptive_vec(
            &|w| self.weighted(w, tau),
            0.0,
            split,
            &self.seeds,
            tol,
            &[0.0; NK],
            self.settings.max_intervals,
        )?;
        let (dc, dc_err) = self.dc_from(split)?;
        let trans = self.tail_transform(split, tau, &head.value)?;

        // assemble: sin components are head + transform; (1−cos) are
        // head + DC − cosT; (1+cos) is head + DC + cosT
        let a12 = pref * (head.value[0] + trans.value[0]);
        let a11 = pref * (head.value[1] + trans.value[1]);
        let q = pref * (head.value[2] + trans.value[2]);
        let p = if self.cross_divergent {
            f64::INFINITY
        } else {
            pref * (head.value[3] + dc[3] - trans.value[3] + head.value[4] + dc[4]
                + trans.value[4])
        };
        let c11 = pref * (head.value[5] + dc[5] - trans.value[5]);
        let c22 = pref * (head.value[6] + dc[6] - trans.value[6]);

        let mut err = 0.0f64;
        for i in 0..NK {
            err = err.max(head.error[i] + trans.error[i]);
        }
        err = pref * (err + dc_err);

        Ok(KernelPoint {
            tau,
            a12,
            a11,
            p,
            q,
            c11,
            c22,
            quad_error: err,
        })
    }
}

/// Commutator kernel `a12(τ)` (one-shot; build a [`KernelEngine`] or a
/// [`CorrelatorTable`] for many lags).
pub fn commutator_a12(params: &MotorParams, tau: f64) -> Result<f64> {
    KernelEngine::new(params, KernelSettings::default())
        .eval(tau)
        .map(|k| k.a12)
}

/// Self commutator kernel `a11(τ) = a22(τ)`.
pub fn commutator_a11(params: &MotorParams, tau: f64) -> Result<f64> {
    KernelEngine::new(params, KernelSettings::default())
        .eval(tau)
        .map(|k| k.a11)
}

/// Cross displacements `(c12, c21)`; both are `+∞` at `k = 0` where the
/// relative coordinate diffuses without bound.
pub fn msd_cross(params: &MotorParams, tau: f64) -> Result<(f64, f64)> {
    KernelEngine::new(params, KernelSettings::default())
        .eval(tau)
        .map(|k| (k.c12(), k.c21()))
}

/// Self displacement `c11` or `c22`.
pub fn msd_self(params: &MotorParams, tau: f64, particle: Particle) -> Result<f64> {
    KernelEngine::new(params, KernelSettings::default())
        .eval(tau)
        .map(|k| match particle {
            Particle::One => k.c11,
            Particle::Two => k.c22,
        })
}

// ---------------------------------------------------------------------------
// time grids
// ---------------------------------------------------------------------------

fn cutoff_profile_at(params: &MotorParams, w: f64) -> f64 {
    params.eta_tilde(w).re / params.bath1.eta0
}

/// Lag beyond which the velocity integrand is negligible: solves the
/// center-of-mass displacement envelope estimate
/// `b²(T1+T2)(γτ − 1 + e^{−γτ})/(2mγ²) = 160` (so `e^{−c/2}` is far below
/// noise), capped at `5·10⁵ m/η₀` for near-zero temperatures where the
/// envelope growth is only logarithmic.
pub fn default_tau_max(params: &MotorParams) -> f64 {
    let gamma = params.bath1.eta0 / params.m;
    let cap = 5e5 * params.m / params.bath1.eta0;
    let t_sum = params.bath1.temperature + params.bath2.temperature;
    if t_sum <= 0.0 {
        return cap;
    }
    let target = 320.0 * params.m * gamma * gamma / (params.b * params.b * t_sum);
    // solve u − 1 + e^{−u} = target
    let mut u = if target > 3.0 {
        target + 1.0
    } else {
        (2.0 * target).sqrt()
    };
    for _ in 0..60 {
        let f = u - 1.0 + (-u).exp() - target;
        let df = 1.0 - (-u).exp();
        if df <= 0.0 {
            break;
        }
        let step = f / df;
        u -= step;
        if u <= 0.0 {
            u = 1e-12;
        }
        if step.abs() < 1e-12 * u.max(1.0) {
            break;
        }
    }
    (u / gamma).min(cap)
}

/// Grid size that resolves the fastest mode at ~48 points per period over
/// the ringing span and continues geometrically to `tau_max`.
pub fn recommended_n_points(params: &MotorParams, tau_max: f64) -> usize {
    let (n_lin, n_geo) = natural_counts(params, tau_max);
    (n_lin + n_geo + 1).clamp(64, 24_000)
}

fn natural_counts(params: &MotorParams, tau_max: f64) -> (usize, usize) {
    let gamma = params.bath1.eta0 / params.m;
    let w_fast = params.omega_y().max(gamma);
    let h = 0.13 / w_fast;
    let ring = ring_time(params).min(tau_max);
    let n_lin = (ring / h).ceil().max(8.0) as usize;
    let n_geo = if tau_max > ring {
        ((tau_max / ring).ln() / 1.05f64.ln()).ceil().max(1.0) as usize
    } else {
        0
    };
    (n_lin, n_geo)
}

fn ring_time(params: &MotorParams) -> f64 {
    let damping = params.bath1.eta0 * cutoff_profile_at(params, params.omega_y()).max(1e-6);
    32.0 * params.m / damping
}

/// Time grid: dense linear section over the damped-ringing span, geometric
/// continuation to `tau_max`, exactly `n_points` nodes starting at 0.
pub fn build_grid(params: &MotorParams, tau_max: f64, n_points: usize) -> Result<Vec<f64>> {
    if !(tau_max > 0.0 && tau_max.is_finite()) {
        return Err(MotorError::InvalidParams(format!(
            "tau_max must be positive and finite, got {tau_max}"
        )));
    }
    if n_points < 16 {
        return Err(MotorError::InvalidParams(format!(
            "grid needs at least 16 points, got {n_points}"
        )));
    }
    let ring = ring_time(params).min(tau_max);
    let (n_lin_nat, n_geo_nat) = natural_counts(params, tau_max);
    let intervals = n_points - 1;
    let (n_lin, n_geo) = if n_geo_nat == 0 {
        (intervals, 0)
    } else {
        let frac = n_lin_nat as f64 / (n_lin_nat + n_geo_nat) as f64;
        let n_lin = ((intervals as f64 * frac).round() as usize).clamp(8, intervals - 1);
        (n_lin, intervals - n_lin)
    };
    let mut grid = Vec::with_capacity(n_points);
    grid.push(0.0);
    for i in 1..=n_lin {
        grid.push(ring * i as f64 / n_lin as f64);
    }
    let ratio = tau_max / ring;
    for j in 1..=n_geo {
        grid.push(ring * ratio.powf(j as f64 / n_geo as f64));
    }
    // guard against duplicate nodes from rounding at the section boundary
    grid.dedup_by(|a, b| *a <= *b + f64::EPSILON * b.abs());
    Ok(grid)
}

// ---------------------------------------------------------------------------
// table
// ---------------------------------------------------------------------------

/// Dense kernel table over an ascending time grid, the input to the velocity
/// quadrature and a JSON-cacheable artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelatorTable {
    pub tau_grid: Vec<f64>,
    pub a12: Vec<f64>,
    pub a11: Vec<f64>,
    /// Symmetric / antisymmetric cross-displacement parts; empty when
    /// `cross_divergent` (then `c12 = c21 = +∞` pointwise).
    pub p_sym: Vec<f64>,
    pub q_anti: Vec<f64>,
    pub c11: Vec<f64>,
    pub c22: Vec<f64>,
    /// Derived columns `p ± q`, empty when `cross_divergent`.
    pub c12: Vec<f64>,
    pub c21: Vec<f64>,
    pub cross_divergent: bool,
    /// Fingerprint of every input that shaped this table (kernel-relevant
    /// parameters, grid, tolerances).
    pub params_hash: u64,
    pub kernel_rel_tol: f64,
    /// Largest per-point quadrature error estimate across the table.
    pub max_quad_error: f64,
}

fn table_hash(params: &MotorParams, tau_max: f64, n_points: usize, rel_tol: f64) -> u64 {
    let mut h = Fnv1a::new();
    h.write_u64(params.kernel_fingerprint());
    h.write_f64(tau_max);
    h.write_u64(n_points as u64);
    h.write_f64(rel_tol);
    h.finish()
}

/// Evaluate the kernels on the standard grid. `tau_max`/`n_points` choose
/// the span and resolution ([`default_tau_max`], [`recommended_n_points`]
/// provide physics-driven defaults).
pub fn build_table(
    params: &MotorParams,
    tau_max: f64,
    n_points: usize,
) -> Result<CorrelatorTable> {
    build_table_with(params, tau_max, n_points, KernelSettings::default())
}

pub fn build_table_with(
    params: &MotorParams,
    tau_max: f64,
    n_points: usize,
    settings: KernelSettings,
) -> Result<CorrelatorTable> {
    let grid = build_grid(params, tau_max, n_points)?;
    let engine = KernelEngine::new(params, settings);
    let n = grid.len();
    let mut table = CorrelatorTable {
        tau_grid: Vec::with_capacity(n),
        a12: Vec::with_capacity(n),
        a11: Vec::with_capacity(n),
        p_sym: Vec::with_capacity(n),
        q_anti: Vec::with_capacity(n),
        c11: Vec::with_capacity(n),
        c22: Vec::with_capacity(n),
        c12: Vec::with_capacity(n),
        c21: Vec::with_capacity(n),
        cross_divergent: engine.cross_divergent,
        params_hash: table_hash(params, tau_max, n_points, settings.rel_tol),
        kernel_rel_tol: settings.rel_tol,
        max_quad_error: 0.0,
    };
    for &tau in &grid {
        let k = engine.eval(tau)?;
        table.tau_grid.push(tau);
        table.a12.push(k.a12);
        table.a11.push(k.a11);
        table.c11.push(k.c11);
        table.c22.push(k.c22);
        if !engine.cross_divergent {
            table.p_sym.push(k.p);
            table.q_anti.push(k.q);
            table.c12.push(k.c12());
            table.c21.push(k.c21());
        }
        table.max_quad_error = table.max_quad_error.max(k.quad_error);
    }
    Ok(table)
}

impl CorrelatorTable {
    /// Does this table describe the given parameters at the given grid and
    /// tolerance?
    pub fn matches(&self, params: &MotorParams) -> bool {
        let n = self.tau_grid.len();
        if n == 0 {
            return false;
        }
        self.params_hash
            == table_hash(
                params,
                *self.tau_grid.last().expect("nonempty grid"),
                n,
                self.kernel_rel_tol,
            )
            || self.recompute_hash_matches(params)
    }

    // the grid may have deduplicated a boundary node; re-derive against the
    // requested n as well as the stored length
    fn recompute_hash_matches(&self, params: &MotorParams) -> bool {
        let tau_max = *self.tau_grid.last().expect("nonempty grid");
        (self.tau_grid.len()..=self.tau_grid.len() + 1)
            .any(|n| self.params_hash == table_hash(params, tau_max, n, self.kernel_rel_tol))
    }

    pub fn save_json(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path)
            .map_err(|e| MotorError::Cache(format!("create {}: {e}", path.display())))?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)
            .map_err(|e| MotorError::Cache(format!("serialize table: {e}")))
    }

    pub fn load_json(path: &std::path::Path) -> Result<CorrelatorTable> {
        let file = std::fs::File::open(path)
            .map_err(|e| MotorError::Cache(format!("open {}: {e}", path.display())))?;
        serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| MotorError::Cache(format!("parse table: {e}")))
    }
}

/// Monotone-cubic interpolants over a kernel table, the form consumed by the
/// velocity quadrature.
#[derive(Debug, Clone)]
pub struct KernelCurves {
    pub a12: Pchip,
    pub a11: Pchip,
    pub p: Option<Pchip>,
    pub q: Option<Pchip>,
    pub c11: Pchip,
    pub c22: Pchip,
    pub cross_divergent: bool,
}

impl KernelCurves {
    pub fn new(table: &CorrelatorTable) -> Result<Self> {
        Self::from_stride(table, 1)
    }

    /// Build from every `stride`-th node (the final node is always kept);
    /// used for interpolation-error estimation by grid decimation.
    pub fn from_stride(table: &CorrelatorTable, stride: usize) -> Result<Self> {
        let pick = |v: &[f64]| -> Vec<f64> {
            let mut out: Vec<f64> = v.iter().copied().step_by(stride).collect();
            if (v.len() - 1) % stride != 0 {
                if let Some(last) = v.last() {
                    out.push(*last);
                }
            }
            out
        };
        let grid = pick(&table.tau_grid);
        let make = |v: &[f64]| Pchip::new(grid.clone(), pick(v));
        Ok(KernelCurves {
            a12: make(&table.a12)?,
            a11: make(&table.a11)?,
            p: if table.cross_divergent {
                None
            } else {
                Some(make(&table.p_sym)?)
            },
            q: if table.cross_divergent {
                None
            } else {
                Some(make(&table.q_anti)?)
            },
            c11: make(&table.c11)?,
            c22: make(&table.c22)?,
            cross_divergent: table.cross_divergent,
        })
    }
}
