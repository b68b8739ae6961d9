//! Core numerics for a two-particle autonomous thermal motor driven by two
//! heat baths at different temperatures.
//!
//! The crate provides two independent routes to the steady-state velocity of
//! the motor's center of mass:
//!
//! 1. **Quadrature** ([`velocity`]): the exact second-order (in the track
//!    amplitude `V0`) velocity, evaluated from oscillatory frequency
//!    integrals over bath correlation kernels ([`correlators`]) and response
//!    functions ([`greens`]).
//! 2. **Simulation** ([`dynamics`]): a stochastic Langevin integrator fed by
//!    pre-synthesized colored noise ([`noise`]) whose power spectrum carries
//!    either the quantum fluctuation–dissipation weight (QMD) or the
//!    classical white-noise weight (MD).
//!
//! The two routes share only the bath definitions ([`bath`]), so their
//! agreement is a genuine cross-validation.
//!
//! All internal computation uses reduced units (k_B = 1); unit conversion
//! from laboratory scales lives in the companion CLI crate.

pub mod bath;
pub mod colored_noise;
pub mod correlators;
pub mod dynamics;
pub mod error;
pub mod greens;
pub mod interp;
pub mod quad;
pub mod vquad;
pub mod special;
pub mod velocity;

pub use velocity::{ForceSpec, Method, VelocityEstimate};

pub use bath::{BathSpec, CutoffKind, MotorParams};
pub use error::{MotorError, Result};

/// FNV-1a 64-bit hash over a byte stream. Used for parameter fingerprints;
/// stable across platforms and Rust releases (unlike `DefaultHasher`).
#[derive(Debug, Clone)]
pub struct Fnv1a(u64);

impl Fnv1a {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;

    pub fn new() -> Self {
        Fnv1a(Self::OFFSET)
    }

    pub fn write_bytes(&mut self, bytes: &[u8]) -> &mut Self {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(Self::PRIME);
        }
        self
    }

    pub fn write_f64(&mut self, x: f64) -> &mut Self {
        self.write_bytes(&x.to_le_bytes())
    }

    pub fn write_u64(&mut self, x: u64) -> &mut Self {
        self.write_bytes(&x.to_le_bytes())
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for Fnv1a {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv1a_known_vectors() {
        // Reference vectors of the standard FNV-1a 64-bit parameters.
        assert_eq!(Fnv1a::new().finish(), 0xcbf29ce484222325);
        assert_eq!(
            Fnv1a::new().write_bytes(b"a").finish(),
            0xaf63dc4c8601ec8c
        );
        assert_eq!(
            Fnv1a::new().write_bytes(b"foobar").finish(),
            0x85944171f73967e8
        );
    }
}
