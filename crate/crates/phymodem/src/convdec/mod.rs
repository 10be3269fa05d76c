//! Rate-1/2 convolutional coding with a decomposable decoder.
//!
//! The codeword's trellis can be cut into equal segments; each segment
//! yields a transfer table holding, for every (entry state, exit state)
//! pair, the best branch-metric sum and the bits that achieve it. Tables
//! compose under (min, +), and chaining them from the zero state back to
//! the zero state reproduces the Viterbi decision exactly — which is what
//! makes the per-segment searcher swappable: either an exhaustive
//! per-segment list search or a trained network proposing one candidate per
//! entry state.
//!
//! Tie-breaking is pinned everywhere to "lexicographically smallest
//! information bits", so independently computed decoders agree bit for bit
//! even on contrived inputs (e.g. an all-zero soft vector, where every path
//! ties).

mod ann;
mod code;
mod ops;
mod segment;
mod viterbi;

pub use ann::{
    ann_parallel_decode, gen_segment_dataset, train_segment_ann, SegmentAnnConfig,
};
pub use code::{
    append_tail, bpsk_llr_channel, conv_encode, random_bits, ConvCodeError, ConvCodeSpec,
};
pub use ops::{count_ops_report, OpsReport};
pub use segment::{
    merge_segments, parallel_mld_decode, segment_table, SegmentPlan, SegmentTable,
};
pub use viterbi::viterbi_mld;
