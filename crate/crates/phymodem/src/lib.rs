//! Link-level workbench for wireless PHY experiments.
//!
//! The crate pairs classical baseband receiver blocks with small dense
//! neural networks trained to replace individual stages, and measures both
//! with a reproducible Monte Carlo harness:
//!
//! - [`sigproc`]: constellations, Eb/N0 bookkeeping, AWGN, FFT, seeded RNG
//!   streams — the substrate every experiment shares.
//! - [`nnet`]: a self-contained dense network engine (forward, backprop,
//!   mini-batch SGD) with a binary model file format.
//! - [`convdec`]: rate-1/2 convolutional coding, Viterbi decoding, and a
//!   parallel segment decoder whose per-segment searcher can be swapped for
//!   a trained network.
//! - [`mimodet`]: uncoded multiuser SIMO detection — matched filter, ZF,
//!   LMMSE, exhaustive ML, and three learned detector families.
//! - [`ofdmasync`]: uplink OFDMA with per-user carrier frequency offsets,
//!   a classify-then-detect receiver bank, and an interference-cancelling
//!   baseline.
//! - [`harness`]: config parsing, sharded BER/BLER sweeps with exact error
//!   bookkeeping, training orchestration, and canned end-to-end recipes.

pub mod convdec;
pub mod harness;
pub mod mimodet;
pub mod nnet;
pub mod ofdmasync;
pub mod sigproc;
