//! Stationary Gaussian noise synthesis with a prescribed power spectrum.
//!
//! Tracks are built in the frequency domain: independent complex Gaussian
//! coefficients with `⟨|Z_k|²⟩ = n·S(ω_k)/dt` at `ω_k = 2πk/(n·dt)`,
//! Hermitian symmetry enforced, inverse FFT to a real sequence. This gives
//! exact discrete PSD control and periodic wrap-around correlation (accepted:
//! trajectories consume exactly one block). The sample variance satisfies
//! `⟨x²⟩ = (n·dt)⁻¹ Σ_k S(ω_k) → (2π)⁻¹ ∫ S dω` over the Nyquist band; for
//! classical Ohmic noise this is the white-noise value `2η₀T/dt`.

use crate::bath::{symmetric_psd, BathSpec, CutoffKind};
use crate::error::{MotorError, Result};
use crate::Fnv1a;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use std::io::{Read, Write};
use std::path::Path;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX2: u64 = 0x94D0_49BB_1331_11EB;

/// The standard splitmix64 generator (Steele–Lea–Flood): used for seed
/// derivation only, never for the noise itself.
#[derive(Debug, Clone, Copy)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(MIX1);
        z = (z ^ (z >> 27)).wrapping_mul(MIX2);
        z ^ (z >> 31)
    }
}

fn mix(seed: u64) -> u64 {
    SplitMix64::new(seed).next_u64()
}

/// Decorrelated per-track seed for (trajectory, particle) from one master
/// seed: two nested splitmix64 steps keyed by the indices. Documented and
/// frozen — ensemble results are reproducible across versions.
pub fn derive_track_seed(master: u64, traj: u64, particle: u64) -> u64 {
    let stage1 = mix(master ^ GOLDEN.wrapping_mul(traj.wrapping_add(1)));
    mix(stage1 ^ MIX1.wrapping_mul(particle.wrapping_add(1)))
}

/// A pre-synthesized stationary Gaussian noise block.
#[derive(Debug, Clone)]
pub struct NoiseTrack {
    pub dt: f64,
    pub samples: Vec<f64>,
    /// The bath whose fluctuation spectrum this track realizes.
    pub spec: BathSpec,
    pub seed: u64,
    /// `S(π/dt) / max_k S(ω_k)`: spectral weight still present at the
    /// Nyquist edge (0 for Ohmic, where the check does not apply).
    pub nyquist_ratio: f64,
}

fn spec_fingerprint(spec: &BathSpec) -> u64 {
    let mut h = Fnv1a::new();
    spec.hash_into(&mut h);
    h.finish()
}

/// Synthesize `n` samples at spacing `dt` of Gaussian noise with power
/// spectral density `symmetric_psd(spec, ·)`, deterministically from `seed`.
///
/// `n` must be a power of two ≥ 2¹⁰. For the cutoff families the spectrum
/// must essentially fit inside the Nyquist band: more than 10% of the peak
/// remaining at `π/dt` is an error, more than 0.1% is reported through
/// [`NoiseTrack::nyquist_ratio`]. Ohmic spectra are exempt — they are not
/// band-limited to begin with, and the discrete track realizes exactly the
/// in-band part (white noise classically, band-limited zero-point noise
/// quantum mechanically).
pub fn synthesize(spec: &BathSpec, n: usize, dt: f64, seed: u64) -> Result<NoiseTrack> {
    if !n.is_power_of_two() || n < 1024 {
        return Err(MotorError::InvalidParams(format!(
            "noise block length must be a power of two >= 1024, got {n}"
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(MotorError::InvalidParams(format!(
            "time step must be positive and finite, got {dt}"
        )));
    }
    let half = n / 2;
    let d_omega = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    let psd: Vec<f64> = (0..=half)
        .map(|k| symmetric_psd(spec, k as f64 * d_omega))
        .collect();

    let nyquist_ratio = if matches!(spec.cutoff, CutoffKind::Ohmic) {
        0.0
    } else {
        let peak = psd.iter().fold(0.0f64, |m, s| m.max(*s));
        let at_nyquist = psd[half];
        if peak > 0.0 && at_nyquist > 0.10 * peak {
            return Err(MotorError::NyquistUnderCoverage {
                at_nyquist,
                peak,
                ratio: 100.0 * at_nyquist / peak,
            });
        }
        if peak > 0.0 {
            at_nyquist / peak
        } else {
            0.0
        }
    };

    // frequency coefficients: fixed draw order (DC; then re, im per interior
    // mode; then Nyquist) keeps tracks bit-reproducible
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut gauss = || -> f64 { rng.sample(StandardNormal) };
    let amp = |s: f64| (s * n as f64 / dt).sqrt();
    let mut z = vec![Complex64::new(0.0, 0.0); n];
    z[0] = Complex64::new(amp(psd[0]) * gauss(), 0.0);
    for k in 1..half {
        let sigma = amp(psd[k]) * std::f64::consts::FRAC_1_SQRT_2;
        z[k] = Complex64::new(sigma * gauss(), sigma * gauss());
        z[n - k] = z[k].conj();
    }
    z[half] = Complex64::new(amp(psd[half]) * gauss(), 0.0);

    FftPlanner::new().plan_fft_inverse(n).process(&mut z);
    let inv_n = 1.0 / n as f64;
    let samples: Vec<f64> = z.iter().map(|c| c.re * inv_n).collect();

    Ok(NoiseTrack {
        dt,
        samples,
        spec: *spec,
        seed,
        nyquist_ratio,
    })
}

/// Binned periodogram-vs-target ratios (minus one) of a track against an
/// arbitrary reference spectrum; DC and Nyquist modes are excluded.
pub fn periodogram_deviation(
    track: &NoiseTrack,
    reference: &BathSpec,
    bins: usize,
) -> Result<Vec<f64>> {
    if bins < 8 {
        return Err(MotorError::InvalidParams(format!(
            "need at least 8 periodogram bins, got {bins}"
        )));
    }
    let n = track.samples.len();
    let half = n / 2;
    if bins > half.saturating_sub(1) {
        return Err(MotorError::InvalidParams(
            "more bins than interior frequency modes".into(),
        ));
    }
    let mut buf: Vec<Complex64> = track
        .samples
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let d_omega = 2.0 * std::f64::consts::PI / (n as f64 * track.dt);
    let scale = track.dt / n as f64;

    let mut out = Vec::with_capacity(bins);
    let modes = half - 1; // k = 1 .. half-1
    for b in 0..bins {
        let lo = 1 + b * modes / bins;
        let hi = 1 + (b + 1) * modes / bins;
        let (mut p_sum, mut s_sum) = (0.0, 0.0);
        for k in lo..hi {
            p_sum += buf[k].norm_sqr() * scale;
            s_sum += symmetric_psd(reference, k as f64 * d_omega);
        }
        out.push(if s_sum > 0.0 { p_sum / s_sum - 1.0 } else { 0.0 });
    }
    Ok(out)
}

/// [`periodogram_deviation`] against the track's own target spectrum.
pub fn periodogram_check(track: &NoiseTrack, bins: usize) -> Result<Vec<f64>> {
    periodogram_deviation(track, &track.spec, bins)
}

const DUMP_MAGIC: &[u8; 8] = b"MOTNOISE";
const DUMP_VERSION: u32 = 1;

impl NoiseTrack {
    /// Raw little-endian dump (debugging artifact): magic, version, n, dt,
    /// seed, bath fingerprint, then the samples.
    pub fn dump_binary(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(
            std::fs::File::create(path)
                .map_err(|e| MotorError::Cache(format!("create {}: {e}", path.display())))?,
        );
        let io = |e: std::io::Error| MotorError::Cache(format!("write noise dump: {e}"));
        w.write_all(DUMP_MAGIC).map_err(io)?;
        w.write_all(&DUMP_VERSION.to_le_bytes()).map_err(io)?;
        w.write_all(&(self.samples.len() as u64).to_le_bytes())
            .map_err(io)?;
        w.write_all(&self.dt.to_le_bytes()).map_err(io)?;
        w.write_all(&self.seed.to_le_bytes()).map_err(io)?;
        w.write_all(&spec_fingerprint(&self.spec).to_le_bytes())
            .map_err(io)?;
        for s in &self.samples {
            w.write_all(&s.to_le_bytes()).map_err(io)?;
        }
        Ok(())
    }

    /// Read a dump back, validating format and that it was produced for the
    /// given bath.
    pub fn load_binary(path: &Path, spec: &BathSpec) -> Result<NoiseTrack> {
        let mut r = std::io::BufReader::new(
            std::fs::File::open(path)
                .map_err(|e| MotorError::Cache(format!("open {}: {e}", path.display())))?,
        );
        let io = |e: std::io::Error| MotorError::Cache(format!("read noise dump: {e}"));
        let mut m8 = [0u8; 8];
        let mut m4 = [0u8; 4];
        r.read_exact(&mut m8).map_err(io)?;
        if &m8 != DUMP_MAGIC {
            return Err(MotorError::Cache("not a noise dump (bad magic)".into()));
        }
        r.read_exact(&mut m4).map_err(io)?;
        if u32::from_le_bytes(m4) != DUMP_VERSION {
            return Err(MotorError::Cache("unsupported noise dump version".into()));
        }
        r.read_exact(&mut m8).map_err(io)?;
        let n = u64::from_le_bytes(m8) as usize;
        r.read_exact(&mut m8).map_err(io)?;
        let dt = f64::from_le_bytes(m8);
        r.read_exact(&mut m8).map_err(io)?;
        let seed = u64::from_le_bytes(m8);
        r.read_exact(&mut m8).map_err(io)?;
        if u64::from_le_bytes(m8) != spec_fingerprint(spec) {
            return Err(MotorError::Cache(
                "noise dump was produced for a different bath".into(),
            ));
        }
        let mut samples = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut m8).map_err(io)?;
            samples.push(f64::from_le_bytes(m8));
        }
        Ok(NoiseTrack {
            dt,
            samples,
            spec: *spec,
            seed,
            nyquist_ratio: 0.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ohmic(t: f64, hbar: f64) -> BathSpec {
        BathSpec::new(1.0, CutoffKind::Ohmic, t, hbar).unwrap()
    }

    #[test]
    fn splitmix64_matches_reference_sequence() {
        // frozen vectors of the published splitmix64 algorithm
        let mut g = SplitMix64::new(0);
        assert_eq!(
            [g.next_u64(), g.next_u64(), g.next_u64(), g.next_u64()],
            [
                0xe220a8397b1dcdaf,
                0x6e789e6aa1b965f4,
                0x06c45d188009454f,
                0xf88bb8a8724c81ec
            ]
        );
        let mut g = SplitMix64::new(0x0123456789abcdef);
        assert_eq!(
            [g.next_u64(), g.next_u64(), g.next_u64(), g.next_u64()],
            [
                0x157a3807a48faa9d,
                0xd573529b34a1d093,
                0x2f90b72e996dccbe,
                0xa2d419334c4667ec
            ]
        );
    }

    #[test]
    fn track_seeds_are_distinct_across_indices() {
        let master = 42;
        let mut seen = std::collections::HashSet::new();
        for traj in 0..64 {
            for particle in 0..2 {
                assert!(seen.insert(derive_track_seed(master, traj, particle)));
            }
        }
        assert_ne!(
            derive_track_seed(1, 0, 0),
            derive_track_seed(2, 0, 0),
            "master seed must matter"
        );
    }

    #[test]
    fn synthesis_is_deterministic() {
        let spec = ohmic(1.0, 1.0);
        let a = synthesize(&spec, 1024, 0.1, 7).unwrap();
        let b = synthesize(&spec, 1024, 0.1, 7).unwrap();
        assert_eq!(a.samples, b.samples);
        let c = synthesize(&spec, 1024, 0.1, 8).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn classical_ohmic_track_is_white_with_fdt_variance() {
        let spec = ohmic(1.0, 0.0);
        let (n, dt) = (1 << 16, 0.5);
        let track = synthesize(&spec, n, dt, 123).unwrap();
        let var = track.samples.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let target = 2.0 * 1.0 * 1.0 / dt; // 2 η₀ T / dt
        let se = target * (2.0 / n as f64).sqrt();
        assert!(
            (var - target).abs() < 3.0 * se,
            "variance {var} vs {target} ± {se}"
        );
        // whiteness: lag-1 autocovariance consistent with zero
        let acov1: f64 = track.samples.windows(2).map(|w| w[0] * w[1]).sum::<f64>()
            / (n - 1) as f64;
        let se1 = target / (n as f64).sqrt();
        assert!(acov1.abs() < 3.0 * se1, "lag-1 {acov1} vs 0 ± {se1}");
    }

    #[test]
    fn zero_temperature_classical_track_is_silent() {
        let spec = ohmic(0.0, 0.0);
        let track = synthesize(&spec, 1024, 0.1, 5).unwrap();
        assert!(track.samples.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn quantum_periodogram_matches_target_psd() {
        let spec = ohmic(1.0, 1.0);
        let track = synthesize(&spec, 1 << 18, 0.1, 99).unwrap();
        let dev = periodogram_check(&track, 16).unwrap();
        // >8000 modes per bin → relative scatter ~1.1%; 5% is ~4.5σ
        for (i, d) in dev.iter().enumerate() {
            assert!(d.abs() < 0.05, "bin {i} deviates by {d}");
        }
    }

    #[test]
    fn wrong_target_spectrum_is_detected() {
        // white classical track checked against a low-T quantum target whose
        // spectrum is dominated by the ħ|ω| zero-point ramp
        let track = synthesize(&ohmic(1.0, 0.0), 1 << 14, 0.1, 4).unwrap();
        let dev = periodogram_deviation(&track, &ohmic(0.05, 1.0), 16).unwrap();
        let max = dev.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        assert!(max > 0.5, "mismatch should exceed 50%, got {max}");
    }

    #[test]
    fn quantum_variance_exceeds_classical_at_same_temperature() {
        let (n, dt, t) = (1 << 16, 0.5, 0.5);
        let var = |hbar: f64| {
            let track = synthesize(&ohmic(t, hbar), n, dt, 11).unwrap();
            track.samples.iter().map(|x| x * x).sum::<f64>() / n as f64
        };
        // Nyquist band reaches ω ≈ 6.3 ≫ T: zero-point modes add weight
        assert!(var(1.0) > 1.5 * var(0.0));
    }

    #[test]
    fn stationarity_between_track_halves() {
        let spec = ohmic(1.0, 0.0);
        let track = synthesize(&spec, 1 << 16, 0.5, 321).unwrap();
        let n = track.samples.len();
        let var_of = |s: &[f64]| s.iter().map(|x| x * x).sum::<f64>() / s.len() as f64;
        let (v1, v2) = (
            var_of(&track.samples[..n / 2]),
            var_of(&track.samples[n / 2..]),
        );
        let se = 4.0 * (2.0 / (n / 2) as f64).sqrt() * std::f64::consts::SQRT_2;
        assert!((v1 - v2).abs() < 3.0 * se, "{v1} vs {v2} ± {se}");
    }

    #[test]
    fn independent_seeds_give_uncorrelated_tracks() {
        let spec = ohmic(1.0, 1.0);
        let a = synthesize(&spec, 1 << 14, 0.2, 1).unwrap();
        let b = synthesize(&spec, 1 << 14, 0.2, 2).unwrap();
        let n = a.samples.len() as f64;
        let dot: f64 = a
            .samples
            .iter()
            .zip(&b.samples)
            .map(|(x, y)| x * y)
            .sum::<f64>()
            / n;
        let va = a.samples.iter().map(|x| x * x).sum::<f64>() / n;
        let vb = b.samples.iter().map(|x| x * x).sum::<f64>() / n;
        let corr = dot / (va * vb).sqrt();
        assert!(corr.abs() < 0.05, "cross-correlation {corr}");
    }

    #[test]
    fn nyquist_coverage_guard() {
        // soft cutoff far beyond the band: almost all weight missing → error
        let bad = BathSpec::new(1.0, CutoffKind::SoftLorentzian(100.0), 1.0, 0.0).unwrap();
        assert!(matches!(
            synthesize(&bad, 1024, 1.0, 3),
            Err(MotorError::NyquistUnderCoverage { .. })
        ));
        // well-resolved cutoff passes with a tiny reported ratio
        let good = BathSpec::new(1.0, CutoffKind::SoftLorentzian(0.5), 1.0, 0.0).unwrap();
        let track = synthesize(&good, 1024, 0.01, 3).unwrap();
        assert!(track.nyquist_ratio < 1e-3, "{}", track.nyquist_ratio);
        // Ohmic is exempt (band-limited realization is the intended object)
        assert!(synthesize(&ohmic(1.0, 1.0), 1024, 1.0, 3).is_ok());
    }

    #[test]
    fn rejects_bad_block_requests() {
        let spec = ohmic(1.0, 1.0);
        assert!(synthesize(&spec, 1000, 0.1, 1).is_err()); // not a power of two
        assert!(synthesize(&spec, 512, 0.1, 1).is_err()); // too short
        assert!(synthesize(&spec, 1024, 0.0, 1).is_err()); // bad dt
        assert!(periodogram_check(&synthesize(&spec, 1024, 0.1, 1).unwrap(), 4).is_err());
    }

    #[test]
    fn binary_dump_roundtrip_validates_spec() {
        let spec = ohmic(0.7, 1.0);
        let track = synthesize(&spec, 1024, 0.25, 17).unwrap();
        let dir = std::env::temp_dir().join("motor-noise-dump-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("track.bin");
        track.dump_binary(&path).unwrap();
        let loaded = NoiseTrack::load_binary(&path, &spec).unwrap();
        assert_eq!(loaded.samples, track.samples);
        assert_eq!(loaded.dt, track.dt);
        assert_eq!(loaded.seed, track.seed);
        // wrong bath rejected
        let other = ohmic(0.8, 1.0);
        assert!(NoiseTrack::load_binary(&path, &other).is_err());
        std::fs::remove_file(&path).ok();
    }
}
