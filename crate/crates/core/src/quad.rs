//! Quadrature engines for the frequency and time integrals.
//!
//! Three building blocks cover everything the kernels need:
//!
//! * [`adaptive`] — worst-first Gauss–Kronrod 15(7) bisection on a finite
//!   interval, with optional seed points so that narrow resonances are split
//!   onto their own subintervals before refinement starts.
//! * [`osc_tail`] / [`trig_halfline`] — trigonometric-weighted integrals
//!   `∫ g(ω)·sin/cos(τω) dω` over half-lines. Segments double geometrically;
//!   each segment uses plain Gauss–Kronrod when it spans few oscillation
//!   periods and a composite Filon–Simpson rule (work independent of the
//!   period count) when it spans many. Truncation is certified by the
//!   integration-by-parts bound `2|g(W)|/τ` for decaying `g`.
//! * [`smooth_tail`] — non-oscillatory decaying tails via doubling segments
//!   and a geometric-ratio tail bound.

use crate::error::{MotorError, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Absolute/relative tolerance pair. The effective target for an integral
/// estimate `I` is `max(abs, rel * |I|)`.
#[derive(Debug, Clone, Copy)]
pub struct Tol {
    pub abs: f64,
    pub rel: f64,
}

impl Tol {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tol { abs, rel }
    }

    pub fn effective(&self, estimate: f64) -> f64 {
        self.abs.max(self.rel * estimate.abs())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Tol {
            abs: self.abs * factor,
            rel: self.rel * factor,
        }
    }
}

/// Result of an adaptive quadrature: value, error estimate, and diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
    /// Subinterval with the largest remaining error estimate.
    pub worst: (f64, f64),
}

// Gauss–Kronrod 15-point rule on [-1, 1] (positive abscissae; the rule is
// symmetric). Nodes/weights are exact to f64 precision; the unit tests pin
// them down via polynomial exactness up to degree 22.
pub(crate) const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
pub(crate) const WGK: [f64; 8] = [
    0.022_935_322_010_529_2,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
pub(crate) const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One application of the Gauss–Kronrod 15(7) rule on `[a, b]`.
/// Returns `(kronrod_value, error_estimate)` using the QUADPACK-style
/// rescaled error model.
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let hl = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    let mut resk = 0.0;
    let mut resg = 0.0;
    let mut fv = [0.0f64; 15];
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        if x == 0.0 {
            let v = f(c);
            fv[14] = v;
            resk += wk * v;
            resg += WG[3] * v;
        } else {
            let v1 = f(c - hl * x);
            let v2 = f(c + hl * x);
            fv[2 * j] = v1;
            fv[2 * j + 1] = v2;
            resk += wk * (v1 + v2);
            if j % 2 == 1 {
                // odd Kronrod indices are the embedded Gauss-7 nodes
                resg += WG[j / 2] * (v1 + v2);
            }
        }
    }
    let reskh = resk * 0.5;
    let mut resasc = WGK[7] * (fv[14] - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[2 * j] - reskh).abs() + (fv[2 * j + 1] - reskh).abs());
    }
    resasc *= hl.abs();
    let mut err = ((resk - resg) * hl).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * 1.0_f64.min((200.0 * err / resasc).powf(1.5));
    }
    (resk * hl, err)
}

struct Interval {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

/// Worst-first adaptive Gauss–Kronrod on `[a, b]`.
///
/// `seeds` are interior points at which the initial interval is pre-split
/// (used to plant narrow resonances on their own subintervals); values
/// outside `(a, b)` are ignored.
pub fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    seeds: &[f64],
    tol: Tol,
    max_intervals: usize,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evals: 0,
            worst: (a, b),
        });
    }
    let mut edges: Vec<f64> = vec![a];
    let mut seeds_sorted: Vec<f64> = seeds
        .iter()
        .copied()
        .filter(|s| *s > a && *s < b && s.is_finite())
        .collect();
    seeds_sorted.sort_by(|p, q| p.partial_cmp(q).unwrap());
    seeds_sorted.dedup();
    edges.extend(seeds_sorted);
    edges.push(b);

    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut evals = 0usize;
    for w in edges.windows(2) {
        let (v, e) = gk15(f, w[0], w[1]);
        evals += 15;
        total += v;
        total_err += e;
        heap.push(Interval {
            lo: w[0],
            hi: w[1],
            value: v,
            error: e,
        });
    }

    while total_err > tol.effective(total) && heap.len() < max_intervals {
        let worst = heap.pop().expect("heap cannot be empty here");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // interval at f64 resolution; cannot split further
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(f, worst.lo, mid);
        let (v2, e2) = gk15(f, mid, worst.hi);
        evals += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Interval {
            lo: worst.lo,
            hi: mid,
            value: v1,
            error: e1,
        });
        heap.push(Interval {
            lo: mid,
            hi: worst.hi,
            value: v2,
            error: e2,
        });
    }

    let worst = heap
        .peek()
        .map(|i| (i.lo, i.hi))
        .unwrap_or((a, b));
    if total_err > tol.effective(total) {
        return Err(MotorError::QuadratureNonConvergence {
            error: total_err,
            tolerance: tol.effective(total),
            worst_lo: worst.0,
            worst_hi: worst.1,
        });
    }
    Ok(QuadResult {
        value: total,
        error: total_err,
        evals,
        worst,
    })
}

/// Which trigonometric weight multiplies `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    Sin,
    Cos,
}

impl Trig {
    #[inline]
    fn eval(self, x: f64) -> f64 {
        match self {
            Trig::Sin => x.sin(),
            Trig::Cos => x.cos(),
        }
    }
}

/// Filon–Simpson moment coefficients for panel phase `theta = tau * h`.
/// Returns `(alpha, beta, gamma)`; Taylor branch below `theta = 0.05`
/// avoids the `O(theta^6)` cancellation of the closed forms.
pub(crate) fn filon_coeffs(theta: f64) -> (f64, f64, f64) {
    if theta.abs() < 0.05 {
        let t2 = theta * theta;
        let alpha = theta * t2 * (2.0 / 45.0 - t2 * (2.0 / 315.0 - t2 * (2.0 / 4725.0)));
        let beta = 2.0 / 3.0 + t2 * (2.0 / 15.0 - t2 * (4.0 / 105.0 - t2 * (2.0 / 567.0)));
        let gamma = 4.0 / 3.0 - t2 * (2.0 / 15.0 - t2 * (1.0 / 210.0 - t2 * (1.0 / 11340.0)));
        (alpha, beta, gamma)
    } else {
        let s = theta.sin();
        let c = theta.cos();
        let t3 = theta * theta * theta;
        let alpha = (theta * theta + theta * s * c - 2.0 * s * s) / t3;
        let beta = 2.0 * (theta * (1.0 + c * c) - 2.0 * s * c) / t3;
        let gamma = 4.0 * (s - theta * c) / t3;
        (alpha, beta, gamma)
    }
}

/// Composite Filon–Simpson rule for `∫_a^b g(ω)·trig(τω) dω` with `n` even
/// panels. The cost is `n + 1` evaluations of `g` regardless of how many
/// oscillation periods `[a, b]` spans; the error is `O(h^4)` in the envelope
/// resolution `h = (b-a)/n`.
pub fn filon<F: Fn(f64) -> f64>(g: &F, a: f64, b: f64, tau: f64, trig: Trig, n: usize) -> f64 {
    assert!(n >= 2 && n % 2 == 0, "filon needs an even panel count >= 2");
    let h = (b - a) / n as f64;
    let theta = tau * h;
    let (alpha, beta, gamma) = filon_coeffs(theta);

    let mut s_even = 0.0; // Σ_{i even} g_i · trig(τω_i), endpoints at half weight
    let mut s_odd = 0.0;
    let mut ga = 0.0;
    let mut gb = 0.0;
    for i in 0..=n {
        let w = a + h * i as f64;
        let gv = g(w);
        let t = trig.eval(tau * w);
        if i == 0 {
            ga = gv;
            s_even += 0.5 * gv * t;
        } else if i == n {
            gb = gv;
            s_even += 0.5 * gv * t;
        } else if i % 2 == 0 {
            s_even += gv * t;
        } else {
            s_odd += gv * t;
        }
    }
    let boundary = match trig {
        Trig::Sin => ga * (tau * a).cos() - gb * (tau * b).cos(),
        Trig::Cos => gb * (tau * b).sin() - ga * (tau * a).sin(),
    };
    h * (alpha * boundary + beta * s_even + gamma * s_odd)
}

/// Filon segment with internal refinement: doubles the panel count until two
/// consecutive estimates agree to `tol` or the doubling budget runs out, and
/// returns the best estimate with the last Richardson difference as its
/// honest error.
fn filon_refined<F: Fn(f64) -> f64>(
    g: &F,
    a: f64,
    b: f64,
    tau: f64,
    trig: Trig,
    tol: Tol,
    evals: &mut usize,
) -> (f64, f64) {
    let mut n = 32;
    let mut prev = filon(g, a, b, tau, trig, n);
    *evals += n + 1;
    let mut diff = f64::INFINITY;
    for _ in 0..6 {
        n *= 2;
        let cur = filon(g, a, b, tau, trig, n);
        *evals += n + 1;
        diff = (cur - prev).abs();
        if diff <= tol.effective(cur) {
            return (cur, diff);
        }
        prev = cur;
    }
    (prev, diff)
}

/// `∫_a^∞ g(ω)·trig(τω) dω` for decaying `g`, `τ > 0`, `a >= 0`.
///
/// Geometrically doubling segments; per segment either Gauss–Kronrod (few
/// periods) or composite Filon (many periods). Stops once the
/// integration-by-parts truncation bound `2|g(W)|/τ` and the last segment
/// contribution both fall below tolerance.
pub fn osc_tail<F: Fn(f64) -> f64>(
    g: &F,
    a: f64,
    tau: f64,
    trig: Trig,
    tol: Tol,
) -> Result<QuadResult> {
    assert!(tau > 0.0, "osc_tail requires tau > 0");
    let mut total = 0.0;
    let mut err = 0.0;
    let mut evals = 0usize;
    let mut lo = a;
    let mut width = a.abs().max(1.0 / tau).max(1e-12);
    #[allow(unused_assignments)]
    let mut last_worst = (a, a);
    for _ in 0..64 {
        let hi = lo + width;
        let periods = width * tau / (2.0 * std::f64::consts::PI);
        let seg_tol = tol.scaled(0.25);
        let (v, e) = if periods <= 3.0 {
            let fw = |w: f64| g(w) * trig.eval(tau * w);
            match adaptive(&fw, lo, hi, &[], seg_tol, 256) {
                Ok(r) => {
                    evals += r.evals;
                    (r.value, r.error)
                }
                Err(_) => {
                    // keep the best available estimate; the truncation/stop
                    // logic below decides whether the total is acceptable
                    let (v, e) = gk15(&fw, lo, hi);
                    evals += 15;
                    (v, e)
                }
            }
        } else {
            filon_refined(g, lo, hi, tau, trig, seg_tol, &mut evals)
        };
        total += v;
        err += e;
        last_worst = (lo, hi);
        lo = hi;
        width *= 2.0;
        let trunc_bound = 2.0 * g(lo).abs() / tau;
        if trunc_bound < tol.effective(total) && v.abs() <= tol.effective(total) {
            return Ok(QuadResult {
                value: total,
                error: err + trunc_bound,
                evals,
                worst: last_worst,
            });
        }
    }
    Err(MotorError::QuadratureNonConvergence {
        error: 2.0 * g(lo).abs() / tau,
        tolerance: tol.effective(total),
        worst_lo: lo,
        worst_hi: f64::INFINITY,
    })
}

/// `∫_0^∞ g(ω)·trig(τω) dω`: adaptive rule on `[0, split]` (with seeds),
/// oscillatory tail machinery beyond. `g` must decay beyond `split`.
pub fn trig_halfline<F: Fn(f64) -> f64>(
    g: &F,
    tau: f64,
    trig: Trig,
    split: f64,
    seeds: &[f64],
    tol: Tol,
) -> Result<QuadResult> {
    let fw = |w: f64| g(w) * trig.eval(tau * w);
    let head = adaptive(&fw, 0.0, split, seeds, tol.scaled(0.5), 4000)?;
    let tail = osc_tail(g, split, tau, trig, tol.scaled(0.5))?;
    Ok(QuadResult {
        value: head.value + tail.value,
        error: head.error + tail.error,
        evals: head.evals + tail.evals,
        worst: if head.error > tail.error {
            head.worst
        } else {
            tail.worst
        },
    })
}

/// `∫_a^∞ g(ω) dω` for eventually-monotone decaying `g` (power-law or
/// faster): doubling segments with a geometric tail bound.
pub fn smooth_tail<F: Fn(f64) -> f64>(g: &F, a: f64, tol: Tol) -> Result<QuadResult> {
    let mut total = 0.0;
    let mut err = 0.0;
    let mut evals = 0usize;
    let mut lo = a;
    let mut width = a.abs().max(1.0).max(1e-12);
    let mut prev_seg: Option<f64> = None;
    for _ in 0..80 {
        let hi = lo + width;
        let (v, e) = gk15(g, lo, hi);
        evals += 15;
        total += v;
        err += e;
        if let Some(p) = prev_seg {
            if p.abs() > 0.0 {
                let r = (v.abs() / p.abs()).min(0.9);
                let bound = v.abs() * r / (1.0 - r);
                if bound < tol.effective(total) {
                    return Ok(QuadResult {
                        value: total,
                        error: err + bound,
                        evals,
                        worst: (lo, hi),
                    });
                }
            } else if v == 0.0 {
                return Ok(QuadResult {
                    value: total,
                    error: err,
                    evals,
                    worst: (lo, hi),
                });
            }
        }
        prev_seg = Some(v);
        lo = hi;
        width *= 2.0;
    }
    Err(MotorError::QuadratureNonConvergence {
        error: prev_seg.unwrap_or(f64::NAN),
        tolerance: tol.effective(total),
        worst_lo: lo,
        worst_hi: f64::INFINITY,
    })
}
