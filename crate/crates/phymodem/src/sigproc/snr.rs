use num_complex::Complex64;
use rand_distr::{Distribution, Normal};

use super::RngStream;

/// Whether a waveform lives on the real line or in the complex plane.
///
/// Real signaling only sees the in-phase noise component, so for a fixed
/// Eb/N0 its noise variance is half the complex one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signaling {
    Real,
    Complex,
}

/// An operating point on a BER curve: Eb/N0 plus the context needed to turn
/// it into a noise variance for unit-energy symbols.
#[derive(Debug, Clone, Copy)]
pub struct SnrSpec {
    pub ebn0_db: f64,
    pub bits_per_symbol: usize,
    pub code_rate: f64,
    pub signaling: Signaling,
}

impl SnrSpec {
    pub fn new(ebn0_db: f64, bits_per_symbol: usize, code_rate: f64, signaling: Signaling) -> Self {
        Self {
            ebn0_db,
            bits_per_symbol,
            code_rate,
            signaling,
        }
    }
}

/// Noise variance that realizes `snr` for unit-average-energy symbols.
///
/// With Es = 1 the energy per information bit is 1 / (code_rate · bits per
/// symbol), so N0 = 1 / (code_rate · bits_per_symbol · 10^(ebn0_db/10)).
/// Complex signaling returns the total complex variance N0; real signaling
/// returns N0/2.
///
/// Panics on a nonpositive code rate, a rate above 1, zero bits per symbol,
/// or a NaN operating point. `ebn0_db = +inf` yields variance 0 (noise off).
pub fn noise_var(snr: &SnrSpec) -> f64 {
    assert!(snr.bits_per_symbol >= 1, "bits_per_symbol must be >= 1");
    assert!(
        snr.code_rate > 0.0 && snr.code_rate <= 1.0,
        "code rate must be in (0, 1], got {}",
        snr.code_rate
    );
    assert!(!snr.ebn0_db.is_nan(), "Eb/N0 must not be NaN");
    let ebn0 = 10f64.powf(snr.ebn0_db / 10.0);
    let n0 = 1.0 / (snr.code_rate * snr.bits_per_symbol as f64 * ebn0);
    match snr.signaling {
        Signaling::Complex => n0,
        Signaling::Real => n0 / 2.0,
    }
}

/// Add circularly-symmetric complex Gaussian noise of the given *total*
/// variance (split evenly between the real and imaginary parts).
pub fn awgn(signal: &[Complex64], total_var: f64, rng: &mut RngStream) -> Vec<Complex64> {
    assert!(
        total_var >= 0.0 && total_var.is_finite(),
        "noise variance must be finite and nonnegative, got {total_var}"
    );
    let normal = Normal::new(0.0, (total_var / 2.0).sqrt()).expect("valid std dev");
    signal
        .iter()
        .map(|&s| s + Complex64::new(normal.sample(rng), normal.sample(rng)))
        .collect()
}

/// Add real Gaussian noise of the given variance to a real-valued signal.
pub fn awgn_real(signal: &[f64], var: f64, rng: &mut RngStream) -> Vec<f64> {
    assert!(
        var >= 0.0 && var.is_finite(),
        "noise variance must be finite and nonnegative, got {var}"
    );
    let normal = Normal::new(0.0, var.sqrt()).expect("valid std dev");
    signal.iter().map(|&s| s + normal.sample(rng)).collect()
}
