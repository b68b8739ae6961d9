//! Parameter sets in laboratory and reduced units, and the map between them.
//!
//! All numerical kernels work in reduced units: the particle mass `m`, the
//! friction coefficient `η₀`, and the lattice wavenumber `b` are scaled to
//! one. The base scales are therefore
//!
//! * time    `t0 = m/η₀`  (the momentum-relaxation time),
//! * length  `l0 = 1/b`,
//! * energy  `e0 = m·(l0/t0)²`.
//!
//! Laboratory inputs follow cold-atom conventions: masses in amu,
//! temperatures and potential depths in μK (energies via `k_B`), wavenumbers
//! in μm⁻¹, and the damping rate `η₀/m` in s⁻¹. The interaction frequency
//! `Ω = √(k/m)` and the bath cutoff `Λ` are quoted as cyclic frequencies
//! (kHz and MHz), so both pick up a factor `2π` on the way to angular
//! reduced units; `η₀/m` is already a rate and does not.

use serde::{Deserialize, Serialize};

use motor_core::bath::CutoffKind;

use crate::error::{CliError, Result};

/// Atomic mass unit, kg (2018 CODATA).
pub const AMU_KG: f64 = 1.660_539_066_60e-27;
/// Boltzmann constant, J/K (exact, 2019 SI).
pub const KB_J_PER_K: f64 = 1.380_649e-23;
/// Reduced Planck constant, J·s (exact, 2019 SI).
pub const HBAR_J_S: f64 = 1.054_571_817e-34;

const TWO_PI: f64 = std::f64::consts::TAU;

fn default_phi() -> f64 {
    std::f64::consts::FRAC_PI_2
}

fn one() -> f64 {
    1.0
}

/// Base scales of the reduced unit system, in SI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseScales {
    /// Time unit, seconds: `m/η₀`.
    pub t0_s: f64,
    /// Length unit, metres: `1/b`.
    pub l0_m: f64,
    /// Energy unit, joules: `m·(l0/t0)²`.
    pub e0_j: f64,
}

impl BaseScales {
    /// Reduced velocity → μm/s.
    pub fn velocity_um_per_s(&self, v_reduced: f64) -> f64 {
        v_reduced * self.l0_m / self.t0_s * 1e6
    }
}

/// Bath cutoff in laboratory units (cyclic MHz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PhysicalCutoff {
    /// Strictly Ohmic bath (no cutoff).
    #[default]
    Ohmic,
    /// Lorentzian rolloff `Λ²/(ω²+Λ²)` with `Λ = 2π·lambda_mhz·10⁶` rad/s.
    Soft { lambda_mhz: f64 },
    /// Exponential rolloff `e^{−|ω|/Λ}`.
    Exp { lambda_mhz: f64 },
}

/// Bath cutoff in reduced units (angular frequency in 1/t0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ReducedCutoff {
    #[default]
    Ohmic,
    Soft { lambda: f64 },
    Exp { lambda: f64 },
}

impl ReducedCutoff {
    pub fn to_kind(self) -> CutoffKind {
        match self {
            ReducedCutoff::Ohmic => CutoffKind::Ohmic,
            ReducedCutoff::Soft { lambda } => CutoffKind::SoftLorentzian(lambda),
            ReducedCutoff::Exp { lambda } => CutoffKind::Exponential(lambda),
        }
    }

    fn validate(&self) -> Result<()> {
        let lambda = match self {
            ReducedCutoff::Ohmic => return Ok(()),
            ReducedCutoff::Soft { lambda } | ReducedCutoff::Exp { lambda } => *lambda,
        };
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(CliError::Config(format!(
                "cutoff lambda must be positive and finite, got {lambda}"
            )));
        }
        Ok(())
    }
}

/// Motor parameters in laboratory units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    /// Particle mass, amu.
    pub m_amu: f64,
    /// Lattice wavenumber, μm⁻¹.
    pub b_per_um: f64,
    /// Cold-bath temperature, μK.
    pub t1_uk: f64,
    /// Hot-bath temperature, μK.
    pub t2_uk: f64,
    /// Damping rate `η₀/m`, s⁻¹.
    pub eta0_over_m_hz: f64,
    /// Interaction frequency `Ω = √(k/m)`, cyclic kHz.
    pub omega_khz: f64,
    /// Lattice depth, μK.
    pub v0_uk: f64,
    /// Lattice phase offset between the two particles, radians.
    #[serde(default = "default_phi")]
    pub phi: f64,
    #[serde(default)]
    pub cutoff: PhysicalCutoff,
}

/// Motor parameters in reduced units (`m = η₀ = b = 1` by default).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReducedParams {
    #[serde(default = "one")]
    pub m: f64,
    #[serde(default = "one")]
    pub eta0: f64,
    #[serde(default = "one")]
    pub b: f64,
    #[serde(default = "one")]
    pub hbar: f64,
    /// Interparticle spring constant `k = mΩ²`.
    #[serde(default)]
    pub k: f64,
    /// Lattice depth.
    #[serde(default)]
    pub v0: f64,
    /// Lattice phase offset.
    #[serde(default = "default_phi")]
    pub phi: f64,
    /// Cold-bath temperature.
    pub t1: f64,
    /// Hot-bath temperature; defaults to `t1` (equal-temperature motor).
    #[serde(default)]
    pub t2: Option<f64>,
    #[serde(default)]
    pub cutoff: ReducedCutoff,
}

impl ReducedParams {
    pub fn t2(&self) -> f64 {
        self.t2.unwrap_or(self.t1)
    }

    /// Early sanity checks with configuration-level messages. The numeric
    /// kernels re-validate on their own.
    pub fn validate(&self) -> Result<()> {
        for (name, v, low) in [
            ("m", self.m, false),
            ("eta0", self.eta0, false),
            ("b", self.b, false),
            ("hbar", self.hbar, true),
            ("k", self.k, true),
            ("v0", self.v0, true),
            ("t1", self.t1, true),
            ("t2", self.t2(), true),
        ] {
            let ok = v.is_finite() && if low { v >= 0.0 } else { v > 0.0 };
            if !ok {
                return Err(CliError::Config(format!(
                    "[params] {name} must be {} and finite, got {v}",
                    if low { "non-negative" } else { "positive" }
                )));
            }
        }
        if !self.phi.is_finite() {
            return Err(CliError::Config(format!(
                "[params] phi must be finite, got {}",
                self.phi
            )));
        }
        self.cutoff.validate()
    }
}

impl PhysicalCutoff {
    fn to_reduced(self, t0_s: f64) -> ReducedCutoff {
        match self {
            PhysicalCutoff::Ohmic => ReducedCutoff::Ohmic,
            PhysicalCutoff::Soft { lambda_mhz } => ReducedCutoff::Soft {
                lambda: TWO_PI * lambda_mhz * 1e6 * t0_s,
            },
            PhysicalCutoff::Exp { lambda_mhz } => ReducedCutoff::Exp {
                lambda: TWO_PI * lambda_mhz * 1e6 * t0_s,
            },
        }
    }

    fn from_reduced(c: ReducedCutoff, t0_s: f64) -> Self {
        let back = |lambda: f64| lambda / (TWO_PI * 1e6 * t0_s);
        match c {
            ReducedCutoff::Ohmic => PhysicalCutoff::Ohmic,
            ReducedCutoff::Soft { lambda } => PhysicalCutoff::Soft {
                lambda_mhz: back(lambda),
            },
            ReducedCutoff::Exp { lambda } => PhysicalCutoff::Exp {
                lambda_mhz: back(lambda),
            },
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v, low) in [
            ("m_amu", self.m_amu, false),
            ("b_per_um", self.b_per_um, false),
            ("eta0_over_m_hz", self.eta0_over_m_hz, false),
            ("t1_uk", self.t1_uk, true),
            ("t2_uk", self.t2_uk, true),
            ("omega_khz", self.omega_khz, true),
            ("v0_uk", self.v0_uk, true),
        ] {
            let ok = v.is_finite() && if low { v >= 0.0 } else { v > 0.0 };
            if !ok {
                return Err(CliError::Config(format!(
                    "[params] {name} must be {} and finite, got {v}",
                    if low { "non-negative" } else { "positive" }
                )));
            }
        }
        if !self.phi.is_finite() {
            return Err(CliError::Config(format!(
                "[params] phi must be finite, got {}",
                self.phi
            )));
        }
        if let PhysicalCutoff::Soft { lambda_mhz } | PhysicalCutoff::Exp { lambda_mhz } =
            self.cutoff
        {
            if !(lambda_mhz.is_finite() && lambda_mhz > 0.0) {
                return Err(CliError::Config(format!(
                    "[params] lambda_mhz must be positive and finite, got {lambda_mhz}"
                )));
            }
        }
        Ok(())
    }

    /// Base scales implied by this parameter set.
    pub fn scales(&self) -> BaseScales {
        let m_kg = self.m_amu * AMU_KG;
        let t0_s = 1.0 / self.eta0_over_m_hz;
        let l0_m = 1.0 / (self.b_per_um * 1e6);
        let e0_j = m_kg * (l0_m / t0_s).powi(2);
        BaseScales { t0_s, l0_m, e0_j }
    }

    /// Map to the reduced system (`m = η₀ = b = 1`).
    pub fn to_reduced(&self) -> ReducedParams {
        let s = self.scales();
        let temp = |t_uk: f64| t_uk * 1e-6 * KB_J_PER_K / s.e0_j;
        let omega_reduced = TWO_PI * self.omega_khz * 1e3 * s.t0_s;
        ReducedParams {
            m: 1.0,
            eta0: 1.0,
            b: 1.0,
            hbar: HBAR_J_S / (s.e0_j * s.t0_s),
            k: omega_reduced * omega_reduced,
            v0: temp(self.v0_uk),
            phi: self.phi,
            t1: temp(self.t1_uk),
            t2: Some(temp(self.t2_uk)),
            cutoff: self.cutoff.to_reduced(s.t0_s),
        }
    }

    /// Inverse map, for round-trip checking: reconstruct the laboratory set
    /// from a reduced set (`m = η₀ = b = 1` assumed) and its base scales.
    pub fn from_reduced(r: &ReducedParams, s: &BaseScales) -> Self {
        let m_kg = s.e0_j * (s.t0_s / s.l0_m).powi(2);
        let temp_uk = |t: f64| t * s.e0_j / KB_J_PER_K * 1e6;
        PhysicalParams {
            m_amu: m_kg / AMU_KG,
            b_per_um: 1.0 / (s.l0_m * 1e6),
            t1_uk: temp_uk(r.t1),
            t2_uk: temp_uk(r.t2()),
            eta0_over_m_hz: 1.0 / s.t0_s,
            omega_khz: r.k.sqrt() / s.t0_s / (TWO_PI * 1e3),
            v0_uk: temp_uk(r.v0),
            phi: r.phi,
            cutoff: PhysicalCutoff::from_reduced(r.cutoff, s.t0_s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Laboratory anchor set: ⁴⁰K-scale mass, μK temperatures, 10 Hz damping.
    fn anchor() -> PhysicalParams {
        PhysicalParams {
            m_amu: 40.0,
            b_per_um: 10.0,
            t1_uk: 1.0,
            t2_uk: 2.5,
            eta0_over_m_hz: 10.0,
            omega_khz: 702.5,
            v0_uk: 0.25,
            phi: std::f64::consts::FRAC_PI_2,
            cutoff: PhysicalCutoff::Soft { lambda_mhz: 2.0 },
        }
    }

    #[test]
    fn conversion_matches_reference_values() {
        // 10-digit references computed independently with exact SI constants
        let p = anchor();
        let s = p.scales();
        assert_relative_eq!(s.t0_s, 0.1, max_relative = 1e-12);
        assert_relative_eq!(s.l0_m, 1e-7, max_relative = 1e-12);
        assert_relative_eq!(s.e0_j, 6.64215626640e-38, max_relative = 1e-9);

        let r = p.to_reduced();
        assert_eq!((r.m, r.eta0, r.b), (1.0, 1.0, 1.0));
        assert_relative_eq!(r.hbar, 1.5876949814e4, max_relative = 1e-9);
        assert_relative_eq!(r.t1, 2.0786156553e8, max_relative = 1e-9);
        assert_relative_eq!(r.t2(), 5.1965391381e8, max_relative = 1e-9);
        assert_relative_eq!(r.k, 1.9482845828e11, max_relative = 1e-9);
        assert_relative_eq!(r.v0, 5.1965391381e7, max_relative = 1e-9);
        match r.cutoff {
            ReducedCutoff::Soft { lambda } => {
                assert_relative_eq!(lambda, 1.2566370614e6, max_relative = 1e-9);
            }
            other => panic!("expected a soft cutoff, got {other:?}"),
        }
    }

    #[test]
    fn physical_round_trip_is_identity() {
        let p = anchor();
        let back = PhysicalParams::from_reduced(&p.to_reduced(), &p.scales());
        assert_relative_eq!(back.m_amu, p.m_amu, max_relative = 1e-12);
        assert_relative_eq!(back.b_per_um, p.b_per_um, max_relative = 1e-12);
        assert_relative_eq!(back.t1_uk, p.t1_uk, max_relative = 1e-12);
        assert_relative_eq!(back.t2_uk, p.t2_uk, max_relative = 1e-12);
        assert_relative_eq!(back.eta0_over_m_hz, p.eta0_over_m_hz, max_relative = 1e-12);
        assert_relative_eq!(back.omega_khz, p.omega_khz, max_relative = 1e-12);
        assert_relative_eq!(back.v0_uk, p.v0_uk, max_relative = 1e-12);
        assert_relative_eq!(back.phi, p.phi, max_relative = 1e-12);
        match (back.cutoff, p.cutoff) {
            (
                PhysicalCutoff::Soft { lambda_mhz: a },
                PhysicalCutoff::Soft { lambda_mhz: b },
            ) => assert_relative_eq!(a, b, max_relative = 1e-12),
            other => panic!("cutoff shape changed in round trip: {other:?}"),
        }
    }

    #[test]
    fn interaction_frequency_and_spring_constant_agree_both_ways() {
        // k = mΩ² with m = 1 in reduced units, checked in both directions
        let p = anchor();
        let s = p.scales();
        let r = p.to_reduced();
        let omega_reduced = TWO_PI * p.omega_khz * 1e3 * s.t0_s;
        assert_relative_eq!(r.k, omega_reduced * omega_reduced, max_relative = 1e-12);
        let back = PhysicalParams::from_reduced(&r, &s);
        assert_relative_eq!(back.omega_khz, 702.5, max_relative = 1e-12);
    }

    #[test]
    fn velocity_rescaling_uses_length_over_time() {
        let s = anchor().scales();
        // 1 reduced velocity unit = l0/t0 = 1e-7 m / 0.1 s = 1 μm/s
        assert_relative_eq!(s.velocity_um_per_s(1.0), 1.0, max_relative = 1e-12);
        assert_relative_eq!(s.velocity_um_per_s(0.25), 0.25, max_relative = 1e-12);
    }

    #[test]
    fn hot_bath_defaults_to_cold_bath_temperature() {
        let r = ReducedParams {
            m: 1.0,
            eta0: 1.0,
            b: 1.0,
            hbar: 1.0,
            k: 0.5,
            v0: 0.1,
            phi: default_phi(),
            t1: 0.7,
            t2: None,
            cutoff: ReducedCutoff::Ohmic,
        };
        assert_eq!(r.t2(), 0.7);
        assert!(r.validate().is_ok());
    }

    #[test]
    fn invalid_parameters_are_rejected_with_field_names() {
        let mut p = anchor();
        p.b_per_um = -1.0;
        let msg = p.validate().unwrap_err().to_string();
        assert!(msg.contains("b_per_um"), "message was: {msg}");

        let r = ReducedParams {
            t1: -0.1,
            ..anchor().to_reduced()
        };
        let msg = r.validate().unwrap_err().to_string();
        assert!(msg.contains("t1"), "message was: {msg}");
    }
}
