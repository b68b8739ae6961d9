//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, MotorError>;

#[derive(Debug, Error)]
pub enum MotorError {
    /// Parameter validation failure at construction time.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A response function was evaluated at a pole (free-particle mode at
    /// zero frequency). Callers must use regularized `(1 - cos)` / `sin`
    /// combinations instead of the bare value.
    #[error("response function pole at omega = {omega}")]
    Pole { omega: f64 },

    /// An adaptive frequency quadrature failed to reach the requested
    /// tolerance. Carries the worst remaining subinterval for diagnostics.
    #[error(
        "frequency quadrature did not converge: error {error:.3e} > tolerance {tolerance:.3e} \
         (worst subinterval [{worst_lo:.6e}, {worst_hi:.6e}])"
    )]
    QuadratureNonConvergence {
        error: f64,
        tolerance: f64,
        worst_lo: f64,
        worst_hi: f64,
    },

    /// The time-integral of the velocity integrand was not negligible at the
    /// end of the tabulated window; the table must be rebuilt with a larger
    /// `tau_max`.
    #[error(
        "time-integral truncation failure: integrand envelope {envelope:.3e} of the accumulated \
         integral at tau_max = {tau_max:.6e}; rebuild the table with tau_max >= {suggested:.6e}"
    )]
    TauTruncation {
        tau_max: f64,
        envelope: f64,
        suggested: f64,
    },

    /// Noise synthesis rejected: the prescribed spectrum still has more than
    /// 10% of its peak weight at the Nyquist frequency.
    #[error(
        "Nyquist under-coverage: psd(pi/dt) = {at_nyquist:.3e} is {ratio:.1}% of the spectral \
         peak {peak:.3e}; decrease dt"
    )]
    NyquistUnderCoverage {
        at_nyquist: f64,
        peak: f64,
        ratio: f64,
    },

    /// A trajectory produced a non-finite coordinate or momentum.
    #[error("numerical blow-up in trajectory {traj} at step {step}")]
    BlowUp { traj: u64, step: usize },

    /// Request outside the supported contract (e.g. work rate with unequal
    /// forces, simulation with a non-Ohmic cutoff).
    #[error("unsupported case: {0}")]
    Unsupported(String),

    /// Interpolation table construction failure (non-monotone grid, too few
    /// points, non-finite data).
    #[error("interpolation table: {0}")]
    Interpolation(String),

    /// Serialization of a cached table failed.
    #[error("table cache: {0}")]
    Cache(String),
}
