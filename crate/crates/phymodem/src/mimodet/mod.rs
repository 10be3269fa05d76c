//! Multiuser uplink detection: several single-antenna transmitters send
//! BPSK symbols through an i.i.d. Rayleigh channel to one multi-antenna
//! receiver.
//!
//! Detectors come in three families:
//! - classical linear equalizers (matched filter, zero forcing, LMMSE) and
//!   the exhaustive maximum-likelihood search, which doubles as the oracle
//!   every learned detector is judged against;
//! - single-shot learned detectors: a per-user classifier on equalized
//!   scalars ("equalize, then learn") and a joint classifier over the whole
//!   receive vector plus channel state ("learn directly");
//! - a layered cancellation detector: one small shared network per user
//!   maps (interference-cancelled residual, own channel column) to a soft
//!   symbol, and layers repeat the cancellation with refined estimates.
//!
//! Conventions: bit 0 maps to symbol +1; user 0 is the most significant
//! bit of the joint symbol-vector class index; per-user Eb is 1 so the
//! complex noise variance is 10^(-ebn0/10); all argmin/argmax decisions
//! break exact ties toward the lower index / lexicographically smaller
//! bits.

mod classical;
mod learned;
mod pic;
mod scene;

pub use classical::{
    lmmse_detect, mf_detect, mld_detect, zf_detect, CelEqualizer,
};
pub use learned::{
    cel_detect, direct_l_detect, gen_mimo_dataset, train_cel, train_direct_l, CelConfig,
    DatasetMode, DirectLConfig,
};
pub use pic::{dnn_pic_detect, train_dnn_pic, PicStack, PicTrainConfig};
pub use scene::{gen_scene, MimoError, MimoScene};
