//! Vectorized counterparts of the [`crate::quad`] engines.
//!
//! The bath kernels need seven frequency integrals per time point, all built
//! from the same expensive factor set (response functions, occupation
//! weights, cutoff profile). Evaluating them on a shared partition — refined
//! until the worst component converges — amortizes one factor evaluation
//! across every component, which is what makes dense kernel tables
//! affordable on a single core.
//!
//! Components may carry different trigonometric weights (see [`Weight`]);
//! convergence is judged per component against a relative target plus a
//! floor tied to the largest component magnitude, so identically-zero
//! components (e.g. commutators in classical mode, the antisymmetric weight
//! in equilibrium) cannot stall refinement.

use crate::error::{MotorError, Result};
use crate::quad::{filon_coeffs, Tol, WG, WGK, XGK};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Convergence target for a component vector: each component `i` must reach
/// `err_i <= max(rel·|v_i|, floor·max_j |v_j|, tiny)`.
#[derive(Debug, Clone, Copy)]
pub struct VTol {
    pub rel: f64,
    pub floor: f64,
}

impl VTol {
    pub fn new(rel: f64, floor: f64) -> Self {
        VTol { rel, floor }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        VTol {
            rel: self.rel * factor,
            floor: self.floor * factor,
        }
    }

    fn targets<const K: usize>(&self, values: &[f64; K], scale_hint: &[f64; K]) -> [f64; K] {
        let mut vmax = 1e-300_f64;
        for i in 0..K {
            vmax = vmax.max(values[i].abs()).max(scale_hint[i].abs());
        }
        let mut t = [0.0; K];
        for i in 0..K {
            t[i] = (self.rel * values[i].abs().max(scale_hint[i].abs())).max(self.floor * vmax);
        }
        t
    }
}

/// Values/errors of a vector quadrature.
#[derive(Debug, Clone, Copy)]
pub struct VQuadResult<const K: usize> {
    pub value: [f64; K],
    pub error: [f64; K],
    pub evals: usize,
}

impl<const K: usize> VQuadResult<K> {
    fn zero() -> Self {
        VQuadResult {
            value: [0.0; K],
            error: [0.0; K],
            evals: 0,
        }
    }

    fn add(&mut self, other: &Self) {
        for i in 0..K {
            self.value[i] += other.value[i];
            self.error[i] += other.error[i];
        }
        self.evals += other.evals;
    }
}

#[inline]
fn axpy<const K: usize>(acc: &mut [f64; K], w: f64, v: &[f64; K]) {
    for i in 0..K {
        acc[i] += w * v[i];
    }
}

/// Gauss–Kronrod 15(7) applied to all components at once.
pub fn gk15_vec<const K: usize, F: Fn(f64) -> [f64; K]>(
    f: &F,
    a: f64,
    b: f64,
) -> ([f64; K], [f64; K]) {
    let hl = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    let mut resk = [0.0; K];
    let mut resg = [0.0; K];
    let mut fv = [[0.0; K]; 15];
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        if x == 0.0 {
            let v = f(c);
            fv[14] = v;
            axpy(&mut resk, wk, &v);
            axpy(&mut resg, WG[3], &v);
        } else {
            let v1 = f(c - hl * x);
            let v2 = f(c + hl * x);
            fv[2 * j] = v1;
            fv[2 * j + 1] = v2;
            for i in 0..K {
                resk[i] += wk * (v1[i] + v2[i]);
                if j % 2 == 1 {
                    resg[i] += WG[j / 2] * (v1[i] + v2[i]);
                }
            }
        }
    }
    let mut value = [0.0; K];
    let mut error = [0.0; K];
    for i in 0..K {
        let reskh = resk[i] * 0.5;
        let mut resasc = WGK[7] * (fv[14][i] - reskh).abs();
        for j in 0..7 {
            resasc += WGK[j] * ((fv[2 * j][i] - reskh).abs() + (fv[2 * j + 1][i] - reskh).abs());
        }
        resasc *= hl.abs();
        let mut err = ((resk[i] - resg[i]) * hl).abs();
        if resasc != 0.0 && err != 0.0 {
            err = resasc * 1.0_f64.min((200.0 * err / resasc).powf(1.5));
        }
        value[i] = resk[i] * hl;
        error[i] = err;
    }
    (value, error)
}

struct VInterval<const K: usize> {
    lo: f64,
    hi: f64,
    value: [f64; K],
    error: [f64; K],
    priority: f64,
}

impl<const K: usize> PartialEq for VInterval<K> {
    fn eq(&self, other: &Self) -> bool {
        self.priority == other.priority
    }
}
impl<const K: usize> Eq for VInterval<K> {}
impl<const K: usize> PartialOrd for VInterval<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const K: usize> Ord for VInterval<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .partial_cmp(&other.priority)
            .unwrap_or(Ordering::Equal)
    }
}

fn priority<const K: usize>(error: &[f64; K], targets: &[f64; K]) -> f64 {
    let mut p = 0.0_f64;
    for i in 0..K {
        p = p.max(error[i] / targets[i].max(1e-300));
    }
    p
}

/// Worst-first adaptive Gauss–Kronrod over all components on one shared
/// partition. `scale_hint` feeds the convergence floor so that components
/// whose value is accidentally near zero (sign cancellation in ω) still get
/// a sane absolute target.
pub fn adaptive_vec<const K: usize, F: Fn(f64) -> [f64; K]>(
    f: &F,
    a: f64,
    b: f64,
    seeds: &[f64],
    tol: VTol,
    scale_hint: &[f64; K],
    max_intervals: usize,
) -> Result<VQuadResult<K>> {
    if a == b {
        return Ok(VQuadResult::zero());
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

    let mut total = [0.0; K];
    let mut total_err = [0.0; K];
    let mut evals = 0usize;
    let mut heap: BinaryHeap<VInterval<K>> = BinaryHeap::new();
    let mut targets = tol.targets(&total, scale_hint);
    for w in edges.windows(2) {
        let (v, e) = gk15_vec(f, w[0], w[1]);
        evals += 15;
        for i in 0..K {
            total[i] += v[i];
            total_err[i] += e[i];
        }
        heap.push(VInterval {
            lo: w[0],
            hi: w[1],
            value: v,
            error: e,
            priority: priority(&e, &targets),
        });
    }

    let converged = |err: &[f64; K], tg: &[f64; K]| (0..K).all(|i| err[i] <= tg[i]);
    loop {
        targets = tol.targets(&total, scale_hint);
        if converged(&total_err, &targets) {
            break;
        }
        if heap.len() >= max_intervals {
            // final re-check with fresh targets before giving up
            let (mut worst_i, mut worst_ratio) = (0, 0.0);
            for i in 0..K {
                let r = total_err[i] / targets[i].max(1e-300);
                if r > worst_ratio {
                    worst_ratio = r;
                    worst_i = i;
                }
            }
            let worst = heap.peek().map(|iv| (iv.lo, iv.hi)).unwrap_or((a, b));
            return Err(MotorError::QuadratureNonConvergence {
                error: total_err[worst_i],
                tolerance: targets[worst_i],
                worst_lo: worst.0,
                worst_hi: worst.1,
            });
        }
        let worst = heap.pop().expect("heap cannot be empty here");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            heap.push(worst);
            break; // f64 resolution; accept what we have
        }
        let (v1, e1) = gk15_vec(f, worst.lo, mid);
        let (v2, e2) = gk15_vec(f, mid, worst.hi);
        evals += 30;
        for i in 0..K {
            total[i] += v1[i] + v2[i] - worst.value[i];
            total_err[i] += e1[i] + e2[i] - worst.error[i];
        }
        heap.push(VInterval {
            lo: worst.lo,
            hi: mid,
            value: v1,
            error: e1,
            priority: priority(&e1, &targets),
        });
        heap.push(VInterval {
            lo: mid,
            hi: worst.hi,
            value: v2,
            error: e2,
            priority: priority(&e2, &targets),
        });
    }

    Ok(VQuadResult {
        value: total,
        error: total_err,
        evals,
    })
}

/// Trigonometric weight attached to one component of a tail transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    Sin,
    Cos,
}

impl Weight {
    #[inline]
    fn eval(self, x: f64) -> f64 {
        match self {
            Weight::Sin => x.sin(),
            Weight::Cos => x.cos(),
        }
    }

}

/// Composite Filon–Simpson on `[a, b]` for every component at once, each
/// with its own sin/cos weight at common frequency `tau`.
pub fn filon_vec<const K: usize, F: Fn(f64) -> [f64; K]>(
    g: &F,
    a: f64,
    b: f64,
    tau: f64,
    weights: &[Weight; K],
    n: usize,
) -> [f64; K] {
    assert!(n >= 2 && n % 2 == 0, "filon needs an even panel count >= 2");
    let h = (b - a) / n as f64;
    let theta = tau * h;
    let (alpha, beta, gamma) = filon_coeffs(theta);

    let mut s_even_sin = [0.0; K];
    let mut s_even_cos = [0.0; K];
    let mut s_odd_sin = [0.0; K];
    let mut s_odd_cos = [0.0; K];
    let mut ga = [0.0; K];
    let mut gb = [0.0; K];
    for i in 0..=n {
        let w = a + h * i as f64;
        let gv = g(w);
        let (s, c) = (tau * w).sin_cos();
        let half = if i == 0 || i == n { 0.5 } else { 1.0 };
        if i == 0 {
            ga = gv;
        }
        if i == n {
            gb = gv;
        }
        if i % 2 == 0 {
            for j in 0..K {
                s_even_sin[j] += half * gv[j] * s;
                s_even_cos[j] += half * gv[j] * c;
            }
        } else {
            for j in 0..K {
                s_odd_sin[j] += gv[j] * s;
                s_odd_cos[j] += gv[j] * c;
            }
        }
    }
    let (sa, ca) = (tau * a).sin_cos();
    let (sb, cb) = (tau * b).sin_cos();
    let mut out = [0.0; K];
    for j in 0..K {
        let (boundary, s_even, s_odd) = match weights[j] {
            Weight::Sin => (ga[j] * ca - gb[j] * cb, s_even_sin[j], s_odd_sin[j]),
            Weight::Cos => (gb[j] * sb - ga[j] * sa, s_even_cos[j], s_odd_cos[j]),
        };
        out[j] = h * (alpha * boundary + beta * s_even + gamma * s_odd);
    }
    out
}

/// Filon span with panel doubling until all components converge (or the
/// budget runs out); errors are the last Richardson differences.
pub fn filon_refined_vec<const K: usize, F: Fn(f64) -> [f64; K]>(
    g: &F,
    a: f64,
    b: f64,
    tau: f64,
    weights: &[Weight; K],
    tol: VTol,
    scale_hint: &[f64; K],
) -> VQuadResult<K> {
    let mut n = 32;
    let mut prev = filon_vec(g, a, b, tau, weights, n);
    let mut evals = n + 1;
    let mut diff = [f64::INFINITY; K];
    for _ in 0..6 {
        n *= 2;
        let cur = filon_vec(g, a, b, tau, weights, n);
        evals += n + 1;
        for i in 0..K {
            diff[i] = (cur[i] - prev[i]).abs();
        }
        let targets = tol.targets(&cur, scale_hint);
        if (0..K).all(|i| diff[i] <= targets[i]) {
            return VQuadResult {
                value: cur,
                error: diff,
                evals,
            };
        }
        prev = cur;
    }
    VQuadResult {
        value: prev,
        error: diff,
        evals,
    }
}

/// `∫_a^∞ g_i(ω)·w_i(τω) dω` for decaying components: doubling segments,
/// Gauss–Kronrod for few-period segments, Filon for many-period ones, and
/// the integration-by-parts truncation bound `2|g_i(W)|/τ` applied per
/// component.
pub fn osc_tail_vec<const K: usize, F: Fn(f64) -> [f64; K]>(
    g: &F,
    a: f64,
    tau: f64,
    weights: &[Weight; K],
    tol: VTol,
    scale_hint: &[f64; K],
) -> Result<VQuadResult<K>> {
    assert!(tau > 0.0, "osc_tail_vec requires tau > 0");
    let mut acc = VQuadResult::zero();
    let mut lo = a;
    let mut width = a.abs().max(1.0 / tau).max(1e-12);
    let seg_tol = tol.scaled(0.25);
    for _ in 0..64 {
        let hi = lo + width;
        let periods = width * tau / (2.0 * std::f64::consts::PI);
        let seg = if periods <= 3.0 {
            let fw = |w: f64| {
                let gv = g(w);
                let mut out = [0.0; K];
                for i in 0..K {
                    out[i] = gv[i] * weights[i].eval(tau * w);
                }
                out
            };
            match adaptive_vec(&fw, lo, hi, &[], seg_tol, scale_hint, 256) {
                Ok(r) => r,
                Err(_) => {
                    let (v, e) = gk15_vec(&fw, lo, hi);
                    VQuadResult {
                        value: v,
                        error: e,
                        evals: 15,
                    }
                }
            }
        } else {
            filon_refined_vec(g, lo, hi, tau, weights, seg_tol, scale_hint)
        };
        acc.add(&seg);
        lo = hi;
        width *= 2.0;
        let gv = g(lo);
        let targets = tol.targets(&acc.value, scale_hint);
        let done = (0..K).all(|i| {
            2.0 * gv[i].abs() / tau <= targets[i] && seg.value[i].abs() <= targets[i]
        });
        if done {
            for i in 0..K {
                acc.error[i] += 2.0 * gv[i].abs() / tau;
            }
            return Ok(acc);
        }
    }
    let gv = g(lo);
    let mut worst = 0.0_f64;
    for i in 0..K {
        worst = worst.max(2.0 * gv[i].abs() / tau);
    }
    Err(MotorError::QuadratureNonConvergence {
        error: worst,
        tolerance: tol.rel,
        worst_lo: lo,
        worst_hi: f64::INFINITY,
    })
}

/// Non-oscillatory decaying tails `∫_a^∞ g_i dω`: doubling segments with a
/// per-component geometric bound.
pub fn smooth_tail_vec<const K: usize, F: Fn(f64) -> [f64; K]>(
    g: &F,
    a: f64,
    tol: VTol,
    scale_hint: &[f64; K],
) -> Result<VQuadResult<K>> {
    let mut acc = VQuadResult::zero();
    let mut lo = a;
    let mut width = a.abs().max(1.0).max(1e-12);
    let mut prev_seg: Option<[f64; K]> = None;
    for _ in 0..80 {
        let hi = lo + width;
        let seg = match adaptive_vec(g, lo, hi, &[], tol.scaled(0.25), scale_hint, 256) {
            Ok(r) => r,
            Err(_) => {
                let (v, e) = gk15_vec(g, lo, hi);
                VQuadResult {
                    value: v,
                    error: e,
                    evals: 15,
                }
            }
        };
        acc.add(&seg);
        let targets = tol.targets(&acc.value, scale_hint);
        if let Some(prev) = prev_seg {
            let done = (0..K).all(|i| {
                let r = if prev[i].abs() > 0.0 {
                    (seg.value[i].abs() / prev[i].abs()).min(0.9)
                } else {
                    0.0
                };
                let bound = seg.value[i].abs() * r / (1.0 - r);
                bound <= targets[i] && seg.value[i].abs() <= 10.0 * targets[i]
            });
            if done {
                for i in 0..K {
                    let r = if prev[i].abs() > 0.0 {
                        (seg.value[i].abs() / prev[i].abs()).min(0.9)
                    } else {
                        0.0
                    };
                    acc.error[i] += seg.value[i].abs() * r / (1.0 - r);
                }
                return Ok(acc);
            }
        }
        prev_seg = Some(seg.value);
        lo = hi;
        width *= 2.0;
    }
    Err(MotorError::QuadratureNonConvergence {
        error: f64::NAN,
        tolerance: tol.rel,
        worst_lo: lo,
        worst_hi: f64::INFINITY,
    })
}

/// Convenience: scalar-compatible tolerances for callers that still think in
/// absolute/relative pairs.
pub fn vtol_from(tol: Tol, floor: f64) -> VTol {
    VTol {
        rel: tol.rel,
        floor,
    }
}
