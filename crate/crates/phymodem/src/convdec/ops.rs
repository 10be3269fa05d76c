use std::fmt;
use std::time::Instant;

use rand::Rng;

use crate::nnet::Network;
use crate::sigproc::RngStream;

use super::ann::ann_segment_table;
use super::code::{bpsk_llr_channel, random_bits, ConvCodeSpec};
use super::segment::segment_table;

/// Work accounting for one segment decode, exact path versus learned path.
///
/// The operation counts are derived from the structures themselves; the
/// medians come from wall-clock timing of repeated single-segment calls on
/// fresh noisy inputs (upper median of the sorted per-call times).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpsReport {
    pub num_states: usize,
    pub steps_per_segment: usize,
    /// Branch-metric evaluations per exact segment table: every state
    /// evaluates both incoming transitions at every step.
    pub mld_branch_evals: u64,
    /// Multiply-accumulates for one network forward pass.
    pub ann_macs_per_start: u64,
    /// Multiply-accumulates for the full bank of start-state hypotheses.
    pub ann_macs_all_starts: u64,
    pub mld_median_ns: u64,
    pub ann_median_ns: u64,
    pub timed_calls: usize,
}

impl fmt::Display for OpsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "segment shape: {} steps, {} states", self.steps_per_segment, self.num_states)?;
        writeln!(f, "exact path:   {} branch-metric evaluations", self.mld_branch_evals)?;
        writeln!(
            f,
            "learned path: {} MACs per start hypothesis, {} MACs for all {}",
            self.ann_macs_per_start, self.ann_macs_all_starts, self.num_states
        )?;
        writeln!(
            f,
            "median wall clock over {} calls: exact {} ns, learned {} ns",
            self.timed_calls, self.mld_median_ns, self.ann_median_ns
        )
    }
}

fn median_ns(mut samples: Vec<u64>) -> u64 {
    samples.sort_unstable();
    samples[samples.len() / 2]
}

/// Count and time the two per-segment decoding paths.
///
/// The segment length is taken from the network's output width; its input
/// width must match that length plus the one-hot state block. Timing
/// inputs are fresh noisy encodings of random bits from random starts.
pub fn count_ops_report(
    spec: &ConvCodeSpec,
    net: &Network,
    timed_calls: usize,
    rng: &mut RngStream,
) -> OpsReport {
    assert!(timed_calls >= 1, "need at least one timed call");
    let steps = net.output_dim();
    let states = spec.num_states();
    assert_eq!(
        net.input_dim(),
        2 * steps + states,
        "network input does not fit this segment shape"
    );

    let mld_branch_evals = (states as u64) * 2 * (steps as u64);
    let ann_macs_per_start: u64 = net
        .layer_specs()
        .iter()
        .map(|s| (s.in_dim * s.out_dim) as u64)
        .sum();
    let ann_macs_all_starts = ann_macs_per_start * states as u64;

    let mut inputs = Vec::with_capacity(timed_calls);
    for _ in 0..timed_calls {
        let start = rng.gen_range(0..states as u32);
        let bits = random_bits(steps, rng);
        let (coded, _) = spec.encode_from_state(&bits, start);
        inputs.push(bpsk_llr_channel(&coded, 2.0, rng));
    }

    let mut mld_ns = Vec::with_capacity(timed_calls);
    let mut ann_ns = Vec::with_capacity(timed_calls);
    for soft in &inputs {
        let t0 = Instant::now();
        let table = segment_table(spec, soft).unwrap();
        mld_ns.push(t0.elapsed().as_nanos() as u64);
        std::hint::black_box(table);

        let t1 = Instant::now();
        let table = ann_segment_table(spec, net, soft, false).unwrap();
        ann_ns.push(t1.elapsed().as_nanos() as u64);
        std::hint::black_box(table);
    }

    OpsReport {
        num_states: states,
        steps_per_segment: steps,
        mld_branch_evals,
        ann_macs_per_start,
        ann_macs_all_starts,
        mld_median_ns: median_ns(mld_ns),
        ann_median_ns: median_ns(ann_ns),
        timed_calls,
    }
}

#[cfg(test)]
mod tests {
    use crate::nnet::{network_init, Activation, LayerSpec};

    use super::*;

    #[test]
    fn counts_for_the_default_decoder_shape() {
        let spec = ConvCodeSpec::default_rate_half();
        let specs = [
            LayerSpec::new(20, 128, Activation::Relu),
            LayerSpec::new(128, 64, Activation::Relu),
            LayerSpec::new(64, 32, Activation::Relu),
            LayerSpec::new(32, 8, Activation::Sigmoid),
        ];
        let net = network_init(&specs, &mut RngStream::new(70, 0)).unwrap();
        let report = count_ops_report(&spec, &net, 25, &mut RngStream::new(70, 1));
        // 4 states x 2 branches x 8 steps.
        assert_eq!(report.mld_branch_evals, 64);
        // 20*128 + 128*64 + 64*32 + 32*8.
        assert_eq!(report.ann_macs_per_start, 13_056);
        assert_eq!(report.ann_macs_all_starts, 4 * 13_056);
        assert_eq!(report.num_states, 4);
        assert_eq!(report.steps_per_segment, 8);
        assert_eq!(report.timed_calls, 25);
        assert!(report.mld_median_ns > 0);
        assert!(report.ann_median_ns > 0);
        let text = report.to_string();
        assert!(text.contains("13056"));
    }

    #[test]
    fn median_is_the_upper_middle_element() {
        assert_eq!(median_ns(vec![5, 1, 9]), 5);
        assert_eq!(median_ns(vec![4, 1, 9, 5]), 5);
        assert_eq!(median_ns(vec![3]), 3);
    }
}
