//! Shared signal-processing substrate: constellations, noise calibration,
//! FFTs, and seedable random streams.
//!
//! Everything downstream (codecs, detectors, sweeps) builds on these
//! primitives, so their conventions are pinned here once:
//!
//! - constellations are normalized to unit average symbol energy;
//! - `noise_var` converts Eb/N0 to a noise variance for unit-energy symbols,
//!   accounting for code rate and bits per symbol;
//! - the FFT pair is unitary up to the 1/N factor on the inverse;
//! - random draws come from named `RngStream`s so every experiment is
//!   reproducible and shards never share a stream.

mod constellation;
mod fft;
mod rng;
mod snr;

pub use constellation::{make_constellation, Constellation, ConstellationKind};
pub use fft::{fft, ifft, FftError};
pub use rng::RngStream;
pub use snr::{awgn, awgn_real, noise_var, Signaling, SnrSpec};
