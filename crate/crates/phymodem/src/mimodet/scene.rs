use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::sigproc::RngStream;

/// Multiuser detection errors.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MimoError {
    #[error("equalizer matrix is numerically singular (condition number {0:.3e})")]
    SingularEqualizer(f64),
    #[error("exhaustive search supports at most 16 users, got {0}")]
    TooManyUsers(usize),
    #[error("model expects input dimension {expected}, scene provides {got}")]
    DimMismatch { expected: usize, got: usize },
}

/// One narrowband uplink snapshot: `K` single-antenna users, `Nr` receive
/// antennas, BPSK symbols, i.i.d. unit-variance complex Gaussian channel.
#[derive(Debug, Clone)]
pub struct MimoScene {
    /// Channel matrix, one column per user (`Nr x K`).
    pub h: DMatrix<Complex64>,
    /// Transmitted bits, one per user (bit 0 -> symbol +1).
    pub bits: Vec<u8>,
    /// Transmitted BPSK symbols (purely real +/-1).
    pub x: DVector<Complex64>,
    /// Received vector `h * x + noise`.
    pub y: DVector<Complex64>,
    /// Complex noise variance (per receive antenna).
    pub n0: f64,
}

impl MimoScene {
    pub fn users(&self) -> usize {
        self.h.ncols()
    }

    pub fn rx_antennas(&self) -> usize {
        self.h.nrows()
    }
}

fn standard_normal(rng: &mut RngStream) -> f64 {
    StandardNormal.sample(rng)
}

/// One draw of a circularly symmetric unit-variance complex Gaussian.
pub(crate) fn complex_gaussian(rng: &mut RngStream) -> Complex64 {
    Complex64::new(
        standard_normal(rng) * std::f64::consts::FRAC_1_SQRT_2,
        standard_normal(rng) * std::f64::consts::FRAC_1_SQRT_2,
    )
}

/// Symbol for one bit under the bit 0 -> +1 convention.
pub(crate) fn bpsk_symbol(bit: u8) -> Complex64 {
    Complex64::new(if bit == 0 { 1.0 } else { -1.0 }, 0.0)
}

/// Draw a fresh scene at the given Eb/N0.
///
/// Per-user Eb is 1 (unit-energy BPSK, unit-variance channel entries), so
/// the complex noise variance is `10^(-ebn0_db/10)`; an infinite Eb/N0
/// switches noise off exactly.
pub fn gen_scene(users: usize, rx_antennas: usize, ebn0_db: f64, rng: &mut RngStream) -> MimoScene {
    assert!(users >= 1 && rx_antennas >= 1, "need at least one user and antenna");
    assert!(!ebn0_db.is_nan(), "Eb/N0 must not be NaN");
    let h = DMatrix::from_fn(rx_antennas, users, |_, _| complex_gaussian(rng));
    let bits: Vec<u8> = (0..users).map(|_| rng.gen_range(0..=1u8)).collect();
    let x = DVector::from_iterator(users, bits.iter().map(|&b| bpsk_symbol(b)));
    let n0 = 10f64.powf(-ebn0_db / 10.0);
    let mut y = &h * &x;
    if n0 > 0.0 {
        let scale = n0.sqrt();
        for v in y.iter_mut() {
            *v += complex_gaussian(rng) * scale;
        }
    }
    MimoScene { h, bits, x, y, n0 }
}
