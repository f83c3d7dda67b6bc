//! Deterministic, seedable signal generation.
//!
//! BPSK excitation, FIR plant/channel filtering and AWGN injection at a
//! target SNR. Every generator is a pure function of its parameters and a
//! 64-bit seed: repeat calls are byte-identical, which is what makes whole
//! experiment runs reproducible. Gaussian samples come from a Box-Muller
//! transform over ChaCha8, so the noise stream is pinned to this crate and
//! the named, versioned PRNG rather than to platform libm behaviour.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// An FIR plant or channel, described by its coefficient vector
/// `(a_1, ..., a_m)`: `y(t) = a_1 x(t) + a_2 x(t-1) + ... + a_m x(t-m+1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirSystem {
    coeffs: Vec<f64>,
}

impl FirSystem {
    /// Non-empty, finite coefficients.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::config("FIR system needs at least one coefficient"));
        }
        if !coeffs.iter().all(|c| c.is_finite()) {
            return Err(Error::config("FIR coefficients must be finite"));
        }
        Ok(FirSystem { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty coefficient vectors
    }

    /// Filters `x` with zero pre-history; output length equals input length.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for (t, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (i, c) in self.coeffs.iter().enumerate() {
                if t >= i {
                    acc += c * x[t - i];
                }
            }
            *out = acc;
        }
        y
    }
}

/// One run's worth of aligned sequences: transmitted symbols, the noiseless
/// system output and its noisy observation.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalFrame {
    /// Transmitted symbol sequence.
    pub x: Vec<f64>,
    /// Noiseless system output.
    pub clean: Vec<f64>,
    /// `clean` plus white Gaussian noise.
    pub noisy: Vec<f64>,
    /// Configured signal-to-noise ratio in dB (`f64::INFINITY` = noiseless).
    pub snr_db: f64,
    /// Seed this frame was generated from.
    pub seed: u64,
}

impl SignalFrame {
    /// Generates BPSK symbols, passes them through `sys` and adds AWGN.
    ///
    /// Symbol and noise streams are derived from `seed` with fixed stream
    /// indices, so frames with distinct seeds are independent.
    pub fn generate(sys: &FirSystem, length: usize, snr_db: f64, seed: u64) -> Result<Self> {
        let x = gen_bpsk(length, derive_seed(seed, 0));
        let clean = sys.filter(&x);
        let (noisy, _sigma) = add_awgn(&clean, snr_db, derive_seed(seed, 1))?;
        Ok(SignalFrame {
            x,
            clean,
            noisy,
            snr_db,
            seed,
        })
    }
}

/// SplitMix64 finalizer; a bijection on u64 used for seed derivation.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from `(base, index)`.
///
/// Runs of an ensemble take `derive_seed(master, run)`, and each run splits
/// further for its symbol and noise streams. The scheme is part of the
/// output format: changing it changes every golden file.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base).wrapping_add(index))
}

/// Equiprobable BPSK symbols in `{-1.0, +1.0}`, fully determined by `seed`.
pub fn gen_bpsk(length: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..length)
        .map(|_| if rng.next_u64() & 1 == 1 { 1.0 } else { -1.0 })
        .collect()
}

/// Adds white Gaussian noise to `clean`, scaled so that
/// `sigma^2 = mean(clean^2) / 10^(snr_db / 10)`. Returns the noisy sequence
/// and the sigma actually used. `snr_db = f64::INFINITY` disables noise.
pub fn add_awgn(clean: &[f64], snr_db: f64, seed: u64) -> Result<(Vec<f64>, f64)> {
    if snr_db == f64::INFINITY {
        return Ok((clean.to_vec(), 0.0));
    }
    if !snr_db.is_finite() {
        return Err(Error::domain(format!("snr_db must be finite or +inf, got {snr_db}")));
    }
    let power = clean.iter().map(|c| c * c).sum::<f64>() / clean.len().max(1) as f64;
    if !(power > 0.0) {
        return Err(Error::domain(
            "SNR is undefined for an all-zero clean signal",
        ));
    }
    let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    let mut gauss = GaussianSource::new(seed);
    let noisy = clean.iter().map(|c| c + sigma * gauss.next()).collect();
    Ok((noisy, sigma))
}

/// The regressor (tapped-delay-line slice) at time `t`:
/// `(x(t), x(t-1), ..., x(t-num_taps+1))` with zero pre-history.
pub fn make_regressor(x: &[f64], t: usize, num_taps: usize) -> Result<Vec<f64>> {
    if t >= x.len() {
        return Err(Error::Index {
            index: t,
            len: x.len(),
        });
    }
    let mut buf = vec![0.0; num_taps];
    fill_regressor(&mut buf, x, t);
    Ok(buf)
}

/// Allocation-free regressor fill for the per-sample experiment loops.
pub(crate) fn fill_regressor(buf: &mut [f64], x: &[f64], t: usize) {
    for (k, slot) in buf.iter_mut().enumerate() {
        *slot = if t >= k { x[t - k] } else { 0.0 };
    }
}

/// Standard-normal sampler: Box-Muller over ChaCha8 with pair caching.
struct GaussianSource {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianSource {
    fn new(seed: u64) -> Self {
        GaussianSource {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform in (0, 1] from the top 53 bits.
    fn next_uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bpsk_is_deterministic_and_binary() {
        let a = gen_bpsk(500, 42);
        let b = gen_bpsk(500, 42);
        assert_eq!(a, b);
        assert_eq!(a.len(), 500);
        assert!(a.iter().all(|&s| s == 1.0 || s == -1.0));
        // different seed, different sequence
        assert_ne!(a, gen_bpsk(500, 43));
    }

    #[test]
    fn bpsk_mean_is_near_zero() {
        let symbols = gen_bpsk(100_000, 7);
        let mean = symbols.iter().sum::<f64>() / symbols.len() as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn fir_identity_system() {
        let sys = FirSystem::new(vec![1.0]).unwrap();
        let x = vec![0.5, -1.5, 2.0, 0.0];
        assert_eq!(sys.filter(&x), x);
    }

    #[test]
    fn fir_steady_state_output_is_coefficient_sum() {
        let sys = FirSystem::new(vec![0.9, 0.3, -0.1]).unwrap();
        let y = sys.filter(&vec![1.0; 6]);
        assert!((y[0] - 0.9).abs() < 1e-15);
        assert!((y[1] - 1.2).abs() < 1e-15);
        for v in &y[2..] {
            assert!((v - 1.1).abs() < 1e-15);
        }
    }

    #[test]
    fn fir_impulse_response_recovers_coefficients() {
        let coeffs = vec![0.9, 0.3, -0.1];
        let sys = FirSystem::new(coeffs.clone()).unwrap();
        let mut impulse = vec![0.0; 6];
        impulse[0] = 1.0;
        let y = sys.filter(&impulse);
        assert_eq!(&y[..3], coeffs.as_slice());
        assert!(y[3..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fir_rejects_bad_coefficients() {
        assert!(FirSystem::new(vec![]).is_err());
        assert!(FirSystem::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn awgn_sigma_arithmetic() {
        // BPSK has exactly unit power, so sigma^2 = 10^(-snr/10)
        let clean = gen_bpsk(1000, 3);
        let (_, sigma10) = add_awgn(&clean, 10.0, 1).unwrap();
        assert!((sigma10 * sigma10 - 0.1).abs() < 1e-14);
        let (_, sigma20) = add_awgn(&clean, 20.0, 1).unwrap();
        assert!((sigma20 * sigma20 - 0.01).abs() < 1e-14);
    }

    #[test]
    fn awgn_noiseless_sentinel() {
        let clean = vec![1.0, -1.0, 0.5];
        let (noisy, sigma) = add_awgn(&clean, f64::INFINITY, 9).unwrap();
        assert_eq!(noisy, clean);
        assert_eq!(sigma, 0.0);
    }

    #[test]
    fn awgn_rejects_zero_signal() {
        assert!(matches!(
            add_awgn(&[0.0, 0.0], 10.0, 1),
            Err(Error::Domain(_))
        ));
        assert!(add_awgn(&[1.0], f64::NAN, 1).is_err());
    }

    #[test]
    fn awgn_realized_snr_close_to_target() {
        let clean = gen_bpsk(10_000, 11);
        for snr_db in [10.0, 20.0] {
            let (noisy, _) = add_awgn(&clean, snr_db, 23).unwrap();
            let noise_power = noisy
                .iter()
                .zip(&clean)
                .map(|(n, c)| (n - c) * (n - c))
                .sum::<f64>()
                / clean.len() as f64;
            let realized = 10.0 * (1.0 / noise_power).log10();
            assert!(
                (realized - snr_db).abs() < 0.5,
                "realized {realized} vs target {snr_db}"
            );
        }
    }

    #[test]
    fn awgn_is_deterministic() {
        let clean = gen_bpsk(256, 5);
        let (a, _) = add_awgn(&clean, 10.0, 77).unwrap();
        let (b, _) = add_awgn(&clean, 10.0, 77).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn regressor_examples() {
        let x = [5.0, 6.0, 7.0];
        assert_eq!(make_regressor(&x, 2, 3).unwrap(), vec![7.0, 6.0, 5.0]);
        assert_eq!(make_regressor(&x, 0, 3).unwrap(), vec![5.0, 0.0, 0.0]);
        assert_eq!(make_regressor(&x, 1, 1).unwrap(), vec![6.0]);
        assert!(matches!(
            make_regressor(&x, 3, 3),
            Err(Error::Index { index: 3, len: 3 })
        ));
    }

    #[test]
    fn frame_invariants_hold_at_500_samples() {
        let sys = FirSystem::new(vec![0.9, 0.3, -0.1]).unwrap();
        for seed in [1, 2, 3, 4] {
            let frame = SignalFrame::generate(&sys, 500, 10.0, seed).unwrap();
            assert_eq!(frame.x.len(), 500);
            assert_eq!(frame.clean.len(), 500);
            assert_eq!(frame.noisy.len(), 500);

            let clean_power =
                frame.clean.iter().map(|c| c * c).sum::<f64>() / frame.clean.len() as f64;
            let noise_power = frame
                .noisy
                .iter()
                .zip(&frame.clean)
                .map(|(n, c)| (n - c) * (n - c))
                .sum::<f64>()
                / frame.clean.len() as f64;
            let realized = 10.0 * (clean_power / noise_power).log10();
            assert!(
                (realized - 10.0).abs() < 0.5,
                "seed {seed}: realized SNR {realized}"
            );
        }
    }

    #[test]
    fn derive_seed_separates_streams() {
        let a = derive_seed(1, 0);
        let b = derive_seed(1, 1);
        let c = derive_seed(2, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        // stability pin: golden files depend on this exact derivation
        assert_eq!(derive_seed(0, 0), splitmix64(splitmix64(0)));
    }
}
