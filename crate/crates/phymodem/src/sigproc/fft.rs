use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// FFT argument errors.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FftError {
    #[error("transform length {0} is not a power of two")]
    NonPowerOfTwoLength(usize),
}

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = planner().lock().expect("FFT planner lock");
    if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    }
}

fn check_len(len: usize) -> Result<(), FftError> {
    if len == 0 || !len.is_power_of_two() {
        return Err(FftError::NonPowerOfTwoLength(len));
    }
    Ok(())
}

/// Forward DFT, unscaled: X[k] = Σ_n x[n]·exp(-j2πkn/N).
///
/// Only power-of-two lengths are accepted. Together with [`ifft`] this is a
/// unitary pair up to the 1/N carried by the inverse, so
/// Σ|x[n]|² = (1/N)·Σ|X[k]|².
pub fn fft(x: &[Complex64]) -> Result<Vec<Complex64>, FftError> {
    check_len(x.len())?;
    let mut buf = x.to_vec();
    plan(x.len(), false).process(&mut buf);
    Ok(buf)
}

/// Inverse DFT with the 1/N factor: x[n] = (1/N)·Σ_k X[k]·exp(+j2πkn/N).
pub fn ifft(x: &[Complex64]) -> Result<Vec<Complex64>, FftError> {
    check_len(x.len())?;
    let mut buf = x.to_vec();
    plan(x.len(), true).process(&mut buf);
    let scale = 1.0 / x.len() as f64;
    for v in &mut buf {
        *v *= scale;
    }
    Ok(buf)
}
