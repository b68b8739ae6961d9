//! Scalar special functions needed by the bath kernels.
//!
//! Everything here is deterministic, allocation-free and accurate to close
//! to machine precision over the argument ranges the physics produces.
//! Reference values in the tests come from 30-digit arbitrary-precision
//! evaluation.

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `x * coth(x)`, the even combination entering every thermal weight.
///
/// Stable at the removable singularity: for `|x| < 1e-4` a Taylor branch
/// `1 + x^2/3 - x^4/45` is used (error < 1e-30 there); elsewhere the exact
/// `|x| * (1 + 2/(e^{2|x|} - 1))` form via `exp_m1`, which degrades
/// gracefully to `|x|` once `e^{2|x|}` overflows.
pub fn xcoth(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-4 {
        let x2 = x * x;
        1.0 + x2 / 3.0 - x2 * x2 / 45.0
    } else {
        let e = (2.0 * ax).exp_m1();
        if e.is_finite() {
            ax * (1.0 + 2.0 / e)
        } else {
            ax
        }
    }
}

/// Hyperbolic cotangent, odd, with the `1/x` pole at the origin.
pub fn coth(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-5 {
        // 1/x + x/3 - x^3/45 + ...
        1.0 / x + x / 3.0
    } else {
        xcoth(x) / x
    }
}

/// Exponential integral `E1(x)` for `x > 0`.
///
/// Power series for `x <= 1.5`, modified-Lentz continued fraction beyond.
pub fn e1(x: f64) -> f64 {
    assert!(x > 0.0, "e1 requires x > 0, got {x}");
    if x <= 1.5 {
        e1_series(x)
    } else {
        e1_cf_scaled(x) * (-x).exp()
    }
}

/// `e^{x} * E1(x)` for `x >= 1.5` — the continued fraction evaluates this
/// scaled form directly, without under/overflow.
pub fn e1_scaled(x: f64) -> f64 {
    assert!(x >= 1.5, "e1_scaled requires x >= 1.5, got {x}");
    e1_cf_scaled(x)
}

fn e1_series(x: f64) -> f64 {
    // E1(x) = -gamma - ln x + sum_{n>=1} (-1)^{n+1} x^n / (n * n!)
    let mut sum = 0.0;
    let mut term = 1.0; // x^n / n! running factor
    for n in 1..=40 {
        term *= x / n as f64;
        let contrib = if n % 2 == 1 { term } else { -term } / n as f64;
        sum += contrib;
        if contrib.abs() < 1e-18 * sum.abs().max(1.0) {
            break;
        }
    }
    -EULER_GAMMA - x.ln() + sum
}

fn e1_cf_scaled(x: f64) -> f64 {
    // e^x E1(x) = 1/(x+1- 1^2/(x+3- 2^2/(x+5- ...))) (modified Lentz)
    const FPMIN: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=200u32 {
        let a = -(i as f64) * (i as f64);
        b += 2.0;
        d = (a * d + b).recip();
        c = b + a / c;
        if c == 0.0 {
            c = FPMIN;
        }
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Exponential integral `Ei(x)` for `x > 0`.
///
/// All-positive power series for `x <= 35` (no cancellation), truncated
/// asymptotic series `e^x/x * sum n!/x^n` beyond.
pub fn ei(x: f64) -> f64 {
    assert!(x > 0.0, "ei requires x > 0, got {x}");
    if x <= 35.0 {
        EULER_GAMMA + x.ln() + ei_series_sum(x)
    } else {
        let mut s = 1.0;
        let mut term = 1.0;
        for n in 1..200u32 {
            let next = term * n as f64 / x;
            if next >= term {
                break; // asymptotic series started diverging
            }
            term = next;
            s += term;
            if term < 1e-17 * s {
                break;
            }
        }
        x.exp() / x * s
    }
}

fn ei_series_sum(x: f64) -> f64 {
    // sum_{n>=1} x^n / (n * n!)
    let mut sum = 0.0;
    let mut term = 1.0;
    for n in 1..=160 {
        term *= x / n as f64;
        let contrib = term / n as f64;
        sum += contrib;
        if contrib < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// The cancellation-free combination `e^{-x} Ei(x) + e^{x} E1(x)` for
/// `x >= 0`, which is `pi * Im eta(omega)/eta0` of the exponential-cutoff
/// memory kernel at `x = |omega|/Lambda`.
///
/// Three regimes:
/// * `x < 2`: `-2 (gamma + ln x) sinh x + [e^{-x} S+ + e^{x} S-]` with the
///   two all-same-sign partial series `S± = Σ (±1)^{n+1} x^n/(n·n!)`, which
///   removes the catastrophic `±(gamma + ln x)` cancellation at small `x`.
/// * `2 <= x <= 35`: direct `e^{-x} Ei(x) + e1_scaled(x)`.
/// * `x > 35`: even asymptotic series `(2/x)(1 + 2!/x^2 + 4!/x^4 + ...)`
///   truncated at its smallest term.
pub fn exi_sum(x: f64) -> f64 {
    assert!(x >= 0.0, "exi_sum requires x >= 0, got {x}");
    if x == 0.0 {
        0.0
    } else if x < 2.0 {
        let mut sp = 0.0; // sum x^n/(n n!)
        let mut sm = 0.0; // alternating
        let mut term = 1.0;
        for n in 1..=40 {
            term *= x / n as f64;
            let c = term / n as f64;
            sp += c;
            sm += if n % 2 == 1 { c } else { -c };
            if c < 1e-18 {
                break;
            }
        }
        -2.0 * (EULER_GAMMA + x.ln()) * x.sinh() + ((-x).exp() * sp + x.exp() * sm)
    } else if x <= 35.0 {
        (-x).exp() * ei(x) + e1_scaled(x)
    } else {
        let x2 = x * x;
        let mut s = 1.0;
        let mut term = 1.0;
        let mut m = 0u64;
        loop {
            m += 1;
            let next = term * ((2 * m - 1) * 2 * m) as f64 / x2;
            if next >= term || next < 1e-17 {
                if next < term {
                    s += next;
                }
                break;
            }
            term = next;
            s += term;
        }
        2.0 / x * s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn e1_reference_values() {
        // 30-digit arbitrary-precision references.
        let cases = [
            (0.1, 1.82292395841939061585),
            (0.5, 0.559773594776160811747),
            (1.0, 0.219383934395520273677),
            (1.5, 0.100019582406632651902),
            (2.0, 0.0489005107080611195672),
            (5.0, 0.00114829559127532579733),
            (10.0, 4.1569689296853242774e-6),
            (30.0, 3.02155201068881254482e-15),
        ];
        for (x, want) in cases {
            assert_relative_eq!(e1(x), want, max_relative = 2e-15);
        }
    }

    #[test]
    fn ei_reference_values() {
        let cases = [
            (0.1, -1.62281281396927661362),
            (0.5, 0.454219904863173579921),
            (1.0, 1.89511781635593675547),
            (1.5, 3.30128544912979783796),
            (2.0, 4.95423435600189016338),
            (5.0, 40.1852753558031774551),
            (10.0, 2492.22897624187775914),
            (30.0, 368973209407.274197064),
        ];
        for (x, want) in cases {
            assert_relative_eq!(ei(x), want, max_relative = 4e-15);
        }
    }

    #[test]
    fn exi_sum_reference_values_all_branches() {
        let cases = [
            (1e-8, 3.76869301581016666256e-7),
            (1e-6, 2.8476589786130505165e-5),
            (1e-3, 0.0146610819494523346823),
            (0.01, 0.100561044194868151153),
            (0.1, 0.546260788160821404415),
            (0.5, 1.19840893103500073097),
            (1.0, 1.29352224555826014311),
            (2.0, 1.03181132667829586574),
            (3.0, 0.756660141603959731217),
            (5.0, 0.441188431775789397393),
            (8.0, 0.260010637626900308473),
            (10.0, 0.20471035441319885991),
            (15.0, 0.134593819599819950372),
            (25.0, 0.0802611762955685521492),
            (29.0, 0.0691319555525093556213),
            (31.0, 0.0646521301087544988082),
            (40.0, 0.050062977865603721476),
            (100.0, 0.0200040048144813755187),
            (500.0, 0.0040000320015361843613),
        ];
        for (x, want) in cases {
            assert_relative_eq!(exi_sum(x), want, max_relative = 5e-14);
        }
    }

    #[test]
    fn xcoth_reference_values() {
        let cases = [
            (1e-9, 1.0),
            (1e-5, 1.00000000003333333333),
            (1e-3, 1.00000033333331111111),
            (0.1, 1.00333111322539896138),
            (0.5, 1.08197670686932642439),
            (1.0, 1.31303528549933130364),
            (5.0, 5.00045401991009687768),
            (20.0, 20.0000000000000001699),
            (50.0, 50.0),
            (800.0, 800.0),
        ];
        for (x, want) in cases {
            assert_relative_eq!(xcoth(x), want, max_relative = 2e-15);
            // even function
            assert_eq!(xcoth(x), xcoth(-x));
        }
    }

    #[test]
    fn coth_matches_xcoth_and_is_odd() {
        for &x in &[1e-7, 1e-3, 0.3, 2.0, 12.0] {
            assert_relative_eq!(coth(x) * x, xcoth(x), max_relative = 1e-14);
            assert_relative_eq!(coth(-x), -coth(x), max_relative = 1e-15);
        }
    }

    #[test]
    fn exi_sum_branch_seams_are_continuous() {
        // Straddle each branch switch and require local linearity: the
        // midpoint must sit on the chord to within the curvature term
        // (~f''·eps²), which any discontinuity across the seam would break.
        for &seam in &[2.0, 35.0] {
            let eps = 1e-6 * seam;
            let a = exi_sum(seam - eps);
            let m = exi_sum(seam);
            let b = exi_sum(seam + eps);
            let chord = 0.5 * (a + b);
            assert!(
                (m - chord).abs() < 1e-11 * m.abs(),
                "seam jump at {seam}: mid {m} vs chord {chord}"
            );
        }
    }
}
