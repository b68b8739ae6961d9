//! Monotone cubic (PCHIP) interpolation.
//!
//! Shape-preserving piecewise cubic Hermite interpolation with
//! Fritsch–Carlson weighted-harmonic-mean slopes. Monotone data produce a
//! monotone interpolant with no overshoot — essential where the interpolated
//! kernel is exponentiated, because an overshoot in `c(τ)` would corrupt
//! `e^{-c/2}` far more than its own magnitude suggests.

use crate::error::{MotorError, Result};

/// Piecewise monotone cubic interpolant over a strictly increasing grid.
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    /// nodal derivatives
    m: Vec<f64>,
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// One-sided three-point endpoint slope with shape-preservation clamps.
fn edge_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if sign(d) != sign(m0) {
        0.0
    } else if sign(m0) != sign(m1) && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

impl Pchip {
    /// Build the interpolant. `x` must be strictly increasing, same length
    /// as `y`, length ≥ 2, all values finite.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(MotorError::Interpolation(format!(
                "grid/value length mismatch: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 2 {
            return Err(MotorError::Interpolation(
                "need at least two nodes".to_string(),
            ));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(MotorError::Interpolation(
                "non-finite node encountered".to_string(),
            ));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MotorError::Interpolation(
                "grid must be strictly increasing".to_string(),
            ));
        }

        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let sec: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();

        let mut m = vec![0.0; n];
        if n == 2 {
            m[0] = sec[0];
            m[1] = sec[0];
        } else {
            for i in 1..n - 1 {
                let (s0, s1) = (sec[i - 1], sec[i]);
                if sign(s0) * sign(s1) <= 0.0 {
                    m[i] = 0.0;
                } else {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    m[i] = (w1 + w2) / (w1 / s0 + w2 / s1);
                }
            }
            m[0] = edge_slope(h[0], h[1], sec[0], sec[1]);
            m[n - 1] = edge_slope(h[n - 2], h[n - 3], sec[n - 2], sec[n - 3]);
        }
        Ok(Pchip { x, y, m })
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.x.last().expect("non-empty by construction")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    /// Index of the interval containing `x` (clamped to the end cubics for
    /// out-of-range queries, which extrapolate).
    fn interval(&self, x: f64) -> usize {
        let n = self.x.len();
        let idx = self.x.partition_point(|&t| t <= x);
        idx.clamp(1, n - 1) - 1
    }

    /// Evaluate the interpolant at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.interval(x);
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.y[i] + h10 * h * self.m[i] + h01 * self.y[i + 1] + h11 * h * self.m[i + 1]
    }

    /// Antiderivative of the interval-`i` cubic from its left node to local
    /// coordinate `t ∈ [0, 1]`, in units of the physical `x`.
    fn interval_integral(&self, i: usize, t: f64) -> f64 {
        let h = self.x[i + 1] - self.x[i];
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let i00 = 0.5 * t4 - t3 + t;
        let i10 = 0.25 * t4 - (2.0 / 3.0) * t3 + 0.5 * t2;
        let i01 = -0.5 * t4 + t3;
        let i11 = 0.25 * t4 - t3 / 3.0;
        h * (i00 * self.y[i]
            + i10 * h * self.m[i]
            + i01 * self.y[i + 1]
            + i11 * h * self.m[i + 1])
    }

    /// Exact integral of the piecewise cubic over `[a, b] ⊆ [x₀, x_{n−1}]`.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        if b < a {
            return -self.integrate(b, a);
        }
        let ia = self.interval(a);
        let ib = self.interval(b);
        let ta = (a - self.x[ia]) / (self.x[ia + 1] - self.x[ia]);
        let tb = (b - self.x[ib]) / (self.x[ib + 1] - self.x[ib]);
        if ia == ib {
            return self.interval_integral(ia, tb) - self.interval_integral(ia, ta);
        }
        let mut total = self.interval_integral(ia, 1.0) - self.interval_integral(ia, ta);
        for i in ia + 1..ib {
            total += self.interval_integral(i, 1.0);
        }
        total + self.interval_integral(ib, tb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference() -> Pchip {
        Pchip::new(
            vec![0.0, 0.7, 1.1, 2.5, 3.0, 4.2, 6.0],
            vec![0.0, 1.2, 0.9, 0.95, 2.0, 3.5, 3.6],
        )
        .unwrap()
    }

    #[test]
    fn matches_reference_implementation_pointwise() {
        // goldens from an independent Fritsch–Carlson implementation
        let p = reference();
        assert_relative_eq!(p.eval(0.35), 8.8721590909090897e-01, max_relative = 1e-14);
        assert_relative_eq!(p.eval(1.0), 9.4687500000000013e-01, max_relative = 1e-14);
        assert_relative_eq!(p.eval(2.0), 9.1829635320209158e-01, max_relative = 1e-14);
        assert_relative_eq!(p.eval(2.75), 1.3786982448100256e+00, max_relative = 1e-14);
        assert_relative_eq!(p.eval(5.0), 3.5696745531477543e+00, max_relative = 1e-14);
    }

    #[test]
    fn matches_reference_integral() {
        let p = reference();
        assert_relative_eq!(
            p.integrate(0.0, 6.0),
            1.2862735225703890e+01,
            max_relative = 1e-13
        );
        // additivity of the integral
        let split = p.integrate(0.0, 2.3) + p.integrate(2.3, 6.0);
        assert_relative_eq!(split, p.integrate(0.0, 6.0), max_relative = 1e-13);
    }

    #[test]
    fn interpolates_nodes_exactly() {
        let p = reference();
        for (&x, &y) in p.x.iter().zip(p.y.iter()) {
            assert_relative_eq!(p.eval(x), y, max_relative = 1e-15, epsilon = 1e-15);
        }
    }

    #[test]
    fn no_overshoot_on_monotone_data() {
        let p = Pchip::new(
            vec![0.0, 1.0, 2.0, 3.0, 4.0],
            vec![0.0, 0.0, 1.0, 2.0, 2.0],
        )
        .unwrap();
        for i in 0..=400 {
            let x = 4.0 * i as f64 / 400.0;
            let v = p.eval(x);
            assert!(
                (-1e-12..=2.0 + 1e-12).contains(&v),
                "overshoot at {x}: {v}"
            );
        }
        // within each interval, values stay between the bracketing nodes
        for i in 0..=100 {
            let x = 1.0 + i as f64 / 100.0;
            let v = p.eval(x);
            assert!((-1e-12..=1.0 + 1e-12).contains(&v));
        }
    }

    #[test]
    fn reproduces_linear_data_exactly() {
        let xs: Vec<f64> = (0..7).map(|i| 0.3 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let p = Pchip::new(xs, ys).unwrap();
        for i in 0..=50 {
            let x = 1.8 * i as f64 / 50.0;
            assert_relative_eq!(p.eval(x), 2.0 * x + 1.0, max_relative = 1e-14);
        }
        assert_relative_eq!(p.integrate(0.2, 1.4), 1.2 * (0.2 + 1.4) + 1.2, max_relative = 1e-14);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Pchip::new(vec![0.0, 0.0, 1.0], vec![1.0, 2.0, 3.0]).is_err());
        assert!(Pchip::new(vec![0.0], vec![1.0]).is_err());
        assert!(Pchip::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
        assert!(Pchip::new(vec![0.0, 1.0, 2.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn two_point_table_is_linear() {
        let p = Pchip::new(vec![1.0, 3.0], vec![2.0, 6.0]).unwrap();
        assert_relative_eq!(p.eval(2.0), 4.0, max_relative = 1e-15);
        assert_relative_eq!(p.integrate(1.0, 3.0), 8.0, max_relative = 1e-15);
    }
}
