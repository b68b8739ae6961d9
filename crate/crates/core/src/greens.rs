//! Response functions of the center-of-mass (`x`) and relative (`y`) modes.
//!
//! Frequency domain:
//! `G̃x(ω) = −1/(mω² + iω η̃(ω))`, `G̃y(ω) = −1/(mω² + iω η̃(ω) − 2k)`.
//!
//! Time domain (`τ ≥ 0`):
//! * Ohmic — textbook closed forms with the three damping branches.
//! * Soft Lorentzian — exact closed forms from the cubic characteristic
//!   polynomial of the Laplace response (the exponential memory kernel
//!   `η₀Λe^{−Λt}` makes the transfer function rational), so no transform
//!   grid is needed even for very sharp resonances.
//! * Exponential cutoff — sine-transform tabulation
//!   `G(τ) = (2/π)∫₀^∞ Im G̃(ω) sin(ωτ) dω` on a caller-supplied τ-grid with
//!   monotone cubic interpolation; the difference `Gx−Gy` is tabulated
//!   directly to avoid small-τ cancellation.

use crate::bath::MotorParams;
use crate::error::{MotorError, Result};
use crate::interp::Pchip;
use crate::quad::{trig_halfline, Tol, Trig};
use num_complex::Complex64;

/// `G̃x(ω)`; fails at the `ω = 0` pole of the free mode.
pub fn green_x(params: &MotorParams, omega: f64) -> Result<Complex64> {
    if omega == 0.0 {
        return Err(MotorError::Pole { omega });
    }
    let eta = params.eta_tilde(omega);
    let denom = Complex64::new(params.m * omega * omega, 0.0) + Complex64::i() * omega * eta;
    Ok(-denom.inv())
}

/// `G̃y(ω)`; the stiffness `2k` removes the `ω = 0` pole unless `k = 0`.
pub fn green_y(params: &MotorParams, omega: f64) -> Result<Complex64> {
    if params.k == 0.0 {
        return green_x(params, omega);
    }
    let eta = params.eta_tilde(omega);
    let denom = Complex64::new(params.m * omega * omega - 2.0 * params.k, 0.0)
        + Complex64::i() * omega * eta;
    Ok(-denom.inv())
}

/// Both Green's functions at once (shares the `η̃` evaluation).
pub fn green_xy(params: &MotorParams, omega: f64) -> Result<(Complex64, Complex64)> {
    if omega == 0.0 {
        return Err(MotorError::Pole { omega });
    }
    let eta = params.eta_tilde(omega);
    let iwe = Complex64::i() * omega * eta;
    let mw2 = params.m * omega * omega;
    let gx = -(Complex64::new(mw2, 0.0) + iwe).inv();
    let gy = if params.k == 0.0 {
        gx
    } else {
        -(Complex64::new(mw2 - 2.0 * params.k, 0.0) + iwe).inv()
    };
    Ok((gx, gy))
}

// ---------------------------------------------------------------------------
// closed-form time-domain machinery
// ---------------------------------------------------------------------------

/// One exponential / damped-oscillatory term of a rational response.
#[derive(Debug, Clone, Copy)]
enum Term {
    /// `c · e^{r τ}`
    Real { c: f64, r: f64 },
    /// `e^{a τ} (cc·cos(bτ) + cs·sin(bτ))`
    Osc { cc: f64, cs: f64, a: f64, b: f64 },
}

/// Finite sum of exponential terms — an exact inverse transform of a
/// rational transfer function.
#[derive(Debug, Clone)]
struct ExpSum {
    terms: Vec<Term>,
}

impl ExpSum {
    fn eval(&self, tau: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| match *t {
                Term::Real { c, r } => c * (r * tau).exp(),
                Term::Osc { cc, cs, a, b } => {
                    (a * tau).exp() * (cc * (b * tau).cos() + cs * (b * tau).sin())
                }
            })
            .sum()
    }
}

/// Roots of the monic cubic `s³ + a2 s² + a1 s + a0` (real coefficients),
/// Newton-polished. Returns either three real roots or one real root plus a
/// complex-conjugate pair represented by `(re, im > 0)`.
fn cubic_roots(a2: f64, a1: f64, a0: f64) -> (Vec<f64>, Option<(f64, f64)>) {
    let p = a1 - a2 * a2 / 3.0;
    let q = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + a0;
    let shift = -a2 / 3.0;
    let disc = 0.25 * q * q + p * p * p / 27.0;

    let polish_real = |mut s: f64| {
        for _ in 0..4 {
            let f = ((s + a2) * s + a1) * s + a0;
            let df = (3.0 * s + 2.0 * a2) * s + a1;
            if df != 0.0 {
                s -= f / df;
            }
        }
        s
    };

    if disc > 0.0 {
        // one real root, one conjugate pair
        let sq = disc.sqrt();
        let u = (-0.5 * q + sq).cbrt();
        let v = (-0.5 * q - sq).cbrt();
        let t1 = u + v;
        let real = polish_real(t1 + shift);
        // deflate: s² + (a2 + real) s + (a1 + real(a2 + real)) divides the cubic
        let b1 = a2 + real;
        let b0 = a1 + real * b1;
        let half = -0.5 * b1;
        let rad = b0 - half * half;
        if rad <= 0.0 {
            // numerically borderline pair collapsed onto the real axis
            let r = (-rad).sqrt();
            return (vec![real, half + r, half - r], None);
        }
        let mut re = half;
        let mut im = rad.sqrt();
        // one complex Newton step to tighten the pair
        for _ in 0..3 {
            let s = Complex64::new(re, im);
            let f = ((s + a2) * s + a1) * s + a0;
            let df = (s * 3.0 + 2.0 * a2) * s + a1;
            if df.norm_sqr() > 0.0 {
                let step = f / df;
                re -= step.re;
                im -= step.im;
            }
        }
        (vec![real], Some((re, im.abs())))
    } else {
        // three real roots (trigonometric form)
        let mp3 = (-p / 3.0).max(0.0);
        let r = mp3.sqrt();
        let arg = if r == 0.0 {
            0.0
        } else {
            (3.0 * q / (2.0 * p * r)).clamp(-1.0, 1.0)
        };
        let theta = arg.acos();
        let roots: Vec<f64> = (0..3)
            .map(|k| {
                let t = 2.0 * r * ((theta - 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos();
                polish_real(t + shift)
            })
            .collect();
        (roots, None)
    }
}

/// Exact inverse transform of `(s + Λ)/(m(s³ + a2 s² + a1 s + a0))` as a sum
/// of exponentials: residue `(r + Λ)/D'(r)` at each simple root `r`, with
/// `D'(s) = m(3s² + 2 a2 s + a1)`.
fn soft_exp_sum(m: f64, lambda: f64, a2: f64, a1: f64, a0: f64) -> Result<ExpSum> {
    let (reals, pair) = cubic_roots(a2, a1, a0);
    let dprime = |s: Complex64| (s * 3.0 + 2.0 * a2) * s + a1;
    let mut terms = Vec::new();
    let scale = (a1.abs() + a2 * a2 + a0.abs().cbrt().powi(2)).max(1e-30);
    for &r in &reals {
        let d = m * ((3.0 * r + 2.0 * a2) * r + a1);
        if d.abs() < 1e-12 * m * scale {
            return Err(MotorError::InvalidParams(
                "degenerate (near-critical) response roots; use the tabulated route".into(),
            ));
        }
        terms.push(Term::Real {
            c: (r + lambda) / d,
            r,
        });
    }
    if let Some((re, im)) = pair {
        let s = Complex64::new(re, im);
        let d = dprime(s) * m;
        if d.norm() < 1e-12 * m * scale {
            return Err(MotorError::InvalidParams(
                "degenerate (near-critical) response roots; use the tabulated route".into(),
            ));
        }
        let c = (s + lambda) / d;
        // r and conj(r) contribute 2·Re[c e^{sτ}]
        terms.push(Term::Osc {
            cc: 2.0 * c.re,
            cs: -2.0 * c.im,
            a: re,
            b: im,
        });
    }
    Ok(ExpSum { terms })
}

// ---------------------------------------------------------------------------
// Ohmic closed forms
// ---------------------------------------------------------------------------

fn ohmic_gx(m: f64, eta0: f64, tau: f64) -> f64 {
    (-(-eta0 * tau / m).exp_m1()) / eta0
}

fn ohmic_gy(m: f64, eta0: f64, k: f64, tau: f64) -> f64 {
    if k == 0.0 {
        return ohmic_gx(m, eta0, tau);
    }
    let g = eta0 / m;
    let disc = 2.0 * k / m - 0.25 * g * g;
    let scale = 2.0 * k / m + 0.25 * g * g;
    if disc.abs() < 1e-12 * scale {
        tau * (-0.5 * g * tau).exp() / m
    } else if disc > 0.0 {
        let w1 = disc.sqrt();
        (-0.5 * g * tau).exp() * (w1 * tau).sin() / (m * w1)
    } else {
        let nu = (-disc).sqrt();
        // e^{-gτ/2} sinh(ντ)/(mν), written to avoid overflow at large ντ
        let decay = 0.5 * ((nu - 0.5 * g) * tau).exp() - 0.5 * ((-nu - 0.5 * g) * tau).exp();
        decay / (m * nu)
    }
}

// ---------------------------------------------------------------------------
// TimeGreens: the evaluator used by the velocity integrals
// ---------------------------------------------------------------------------

/// Time-domain Green's function evaluator for one parameter set.
#[derive(Debug, Clone)]
pub enum TimeGreens {
    Ohmic {
        m: f64,
        eta0: f64,
        k: f64,
    },
    SoftClosed {
        gx: ExpSumBox,
        gy: Option<ExpSumBox>,
        k: f64,
    },
    Tabulated {
        gx: Pchip,
        gy: Pchip,
        /// `Gx − Gy` tabulated directly (no subtractive cancellation).
        diff: Pchip,
        k: f64,
    },
}

/// Newtype so the enum stays `Debug`-printable without dumping every term.
#[derive(Clone)]
pub struct ExpSumBox(ExpSum);

impl std::fmt::Debug for ExpSumBox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ExpSum({} terms)", self.0.terms.len())
    }
}

impl TimeGreens {
    /// Build the evaluator. `tau_grid` is only consulted for the
    /// exponential-cutoff family which has no rational transfer function;
    /// it must then be a strictly increasing grid starting at 0.
    pub fn build(params: &MotorParams, tau_grid: &[f64]) -> Result<Self> {
        use crate::bath::CutoffKind::*;
        match params.bath1.cutoff {
            Ohmic => Ok(TimeGreens::Ohmic {
                m: params.m,
                eta0: params.bath1.eta0,
                k: params.k,
            }),
            SoftLorentzian(lambda) => {
                let m = params.m;
                let eta0 = params.bath1.eta0;
                let gx = soft_exp_sum(m, lambda, lambda, eta0 * lambda / m, 0.0)?;
                let gy = if params.k > 0.0 {
                    Some(ExpSumBox(soft_exp_sum(
                        m,
                        lambda,
                        lambda,
                        (eta0 * lambda + 2.0 * params.k) / m,
                        2.0 * params.k * lambda / m,
                    )?))
                } else {
                    None
                };
                Ok(TimeGreens::SoftClosed {
                    gx: ExpSumBox(gx),
                    gy,
                    k: params.k,
                })
            }
            Exponential(_) => Self::tabulate(params, tau_grid),
        }
    }

    fn tabulate(params: &MotorParams, tau_grid: &[f64]) -> Result<Self> {
        if tau_grid.len() < 2 || tau_grid[0] != 0.0 {
            return Err(MotorError::InvalidParams(
                "exponential-cutoff Green's tabulation needs a τ-grid starting at 0".into(),
            ));
        }
        let tol = Tol::new(1e-11, 1e-9);
        let w_res = params.omega_y();
        let gamma = params.bath1.eta0 / params.m;
        let width = params.eta_tilde(w_res.max(1e-300)).re / params.m;
        let mut seeds = vec![gamma];
        if w_res > 0.0 {
            for s in [
                w_res - 5.0 * width,
                w_res - width,
                w_res,
                w_res + width,
                w_res + 5.0 * width,
                w_res + 50.0 * width,
            ] {
                if s > 0.0 {
                    seeds.push(s);
                }
            }
        }
        let split = (3.0 * w_res.max(gamma)).max(10.0 * gamma);

        let im_gx = |w: f64| {
            if w == 0.0 {
                0.0
            } else {
                green_x(params, w).map(|g| g.im).unwrap_or(0.0)
            }
        };
        let im_diff = |w: f64| {
            if w == 0.0 {
                0.0
            } else {
                green_xy(params, w)
                    .map(|(gx, gy)| (gx - gy).im)
                    .unwrap_or(0.0)
            }
        };

        let mut gx_vals = Vec::with_capacity(tau_grid.len());
        let mut diff_vals = Vec::with_capacity(tau_grid.len());
        for &tau in tau_grid {
            if tau == 0.0 {
                gx_vals.push(0.0);
                diff_vals.push(0.0);
                continue;
            }
            let gx = trig_halfline(&im_gx, tau, Trig::Sin, split, &seeds, tol)?;
            gx_vals.push(2.0 / std::f64::consts::PI * gx.value);
            if params.k > 0.0 {
                let d = trig_halfline(&im_diff, tau, Trig::Sin, split, &seeds, tol)?;
                diff_vals.push(2.0 / std::f64::consts::PI * d.value);
            } else {
                diff_vals.push(0.0);
            }
        }
        let gy_vals: Vec<f64> = gx_vals
            .iter()
            .zip(diff_vals.iter())
            .map(|(gx, d)| gx - d)
            .collect();
        Ok(TimeGreens::Tabulated {
            gx: Pchip::new(tau_grid.to_vec(), gx_vals)?,
            gy: Pchip::new(tau_grid.to_vec(), gy_vals)?,
            diff: Pchip::new(tau_grid.to_vec(), diff_vals)?,
            k: params.k,
        })
    }

    /// Center-of-mass response `Gx(τ)`; 0 for `τ < 0` (causality).
    pub fn gx(&self, tau: f64) -> f64 {
        if tau < 0.0 {
            return 0.0;
        }
        match self {
            TimeGreens::Ohmic { m, eta0, .. } => ohmic_gx(*m, *eta0, tau),
            TimeGreens::SoftClosed { gx, .. } => gx.0.eval(tau),
            TimeGreens::Tabulated { gx, .. } => gx.eval(tau),
        }
    }

    /// Relative-mode response `Gy(τ)`; equals `Gx` exactly at `k = 0`.
    pub fn gy(&self, tau: f64) -> f64 {
        if tau < 0.0 {
            return 0.0;
        }
        match self {
            TimeGreens::Ohmic { m, eta0, k } => ohmic_gy(*m, *eta0, *k, tau),
            TimeGreens::SoftClosed { gx, gy, .. } => match gy {
                Some(gy) => gy.0.eval(tau),
                None => gx.0.eval(tau),
            },
            TimeGreens::Tabulated { gy, .. } => gy.eval(tau),
        }
    }

    /// `Gx(τ) − Gy(τ)`, identically 0 at `k = 0`.
    pub fn diff(&self, tau: f64) -> f64 {
        if tau < 0.0 {
            return 0.0;
        }
        match self {
            TimeGreens::Ohmic { m, eta0, k } => {
                if *k == 0.0 {
                    0.0
                } else {
                    ohmic_gx(*m, *eta0, tau) - ohmic_gy(*m, *eta0, *k, tau)
                }
            }
            TimeGreens::SoftClosed { gx, gy, .. } => match gy {
                Some(gy) => gx.0.eval(tau) - gy.0.eval(tau),
                None => 0.0,
            },
            TimeGreens::Tabulated { diff, k, .. } => {
                if *k == 0.0 {
                    0.0
                } else {
                    diff.eval(tau)
                }
            }
        }
    }

    /// `Gx(τ) + Gy(τ)`.
    pub fn sum(&self, tau: f64) -> f64 {
        2.0 * self.gx(tau) - self.diff(tau)
    }
}

/// `Gx(τ)` as a standalone call. Ohmic and soft-Lorentzian families use the
/// closed forms; the exponential cutoff performs a one-shot sine transform
/// (prefer [`TimeGreens::build`] when evaluating many τ).
pub fn green_x_time(params: &MotorParams, tau: f64) -> Result<f64> {
    if tau < 0.0 {
        return Ok(0.0);
    }
    single_time_value(params, tau, false)
}

/// `Gy(τ)` as a standalone call; see [`green_x_time`].
pub fn green_y_time(params: &MotorParams, tau: f64) -> Result<f64> {
    if tau < 0.0 {
        return Ok(0.0);
    }
    single_time_value(params, tau, true)
}

fn single_time_value(params: &MotorParams, tau: f64, want_y: bool) -> Result<f64> {
    use crate::bath::CutoffKind::*;
    match params.bath1.cutoff {
        Ohmic => Ok(if want_y {
            ohmic_gy(params.m, params.bath1.eta0, params.k, tau)
        } else {
            ohmic_gx(params.m, params.bath1.eta0, tau)
        }),
        SoftLorentzian(_) => {
            let tg = TimeGreens::build(params, &[])?;
            Ok(if want_y { tg.gy(tau) } else { tg.gx(tau) })
        }
        Exponential(_) => {
            if tau == 0.0 {
                return Ok(0.0);
            }
            let tg = TimeGreens::tabulate(params, &[0.0, tau])?;
            Ok(if want_y { tg.gy(tau) } else { tg.gx(tau) })
        }
    }
}
