//! Multiuser OFDMA uplink with per-user carrier-frequency offsets.
//!
//! Users share one OFDM symbol through interleaved subcarriers; each
//! user's signal passes its own multipath channel and picks up its own
//! CFO phase ramp, which destroys subcarrier orthogonality and leaks
//! energy between users. Three receivers are compared:
//! - a classify-then-detect bank: per-user classifiers estimate which
//!   CFO sub-range each user sits in, then pre-trained per-(user,
//!   sub-range) detection networks map the raw window plus channel state
//!   to symbol decisions, optionally fusing the classified sub-range's
//!   two neighbors;
//! - an iterative parallel-interference-cancellation baseline that
//!   derotates by sub-range-center CFO estimates, equalizes per bin,
//!   reconstructs and subtracts interference;
//! - a CFO-free zero-forcing reference that bounds the achievable
//!   block error rate.
//!
//! Master oracle: with all CFOs zero and the cyclic prefix covering the
//! channel memory, the time-domain simulation must match per-subcarrier
//! multiplication to near machine precision.

mod catmud;
mod config;
mod picbase;
mod scene;

pub use catmud::{
    cat_mud_detect, cfo_classify, gen_branch_dataset, gen_classifier_dataset, train_branch_bank,
    BranchBank, BranchBankConfig,
};
pub use config::{OfdmaConfig, OfdmaError};
pub use picbase::pic_baseline_detect;
pub use scene::{
    bler_eval, cfo_free_reference, compose_received, gen_scene, gen_scene_cfo_free,
    ofdma_modulate, time_noise_var, user_freq_response, BlerPoint, OfdmaScene,
};
