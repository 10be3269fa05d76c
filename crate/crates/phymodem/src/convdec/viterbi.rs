use super::code::{ConvCodeError, ConvCodeSpec};

/// One per-state survivor: accumulated squared-Euclidean metric and the
/// input bits of the path that achieves it. `metric == INFINITY` marks an
/// unreachable state (its bits are meaningless).
pub(crate) type Survivor = (f64, Vec<u8>);

/// Run the trellis forward across `soft` (two values per step) from the
/// given initial survivors; returns one survivor per state.
///
/// Metric ties resolve toward the candidate whose input-bit path is
/// lexicographically smaller. Both transitions into a state carry the same
/// input bit (it is the state's LSB), so comparing predecessor paths is the
/// full comparison; and because a survivor is always the lexicographically
/// smallest among equal-metric paths into its state, the rule composes
/// step by step into a global one.
pub(crate) fn trellis_sweep(
    spec: &ConvCodeSpec,
    soft: &[f64],
    init: Vec<Survivor>,
) -> Vec<Survivor> {
    let num_states = spec.num_states();
    debug_assert_eq!(init.len(), num_states);
    debug_assert_eq!(soft.len() % 2, 0);
    let memory = spec.memory();
    let mut current = init;

    for pair in soft.chunks_exact(2) {
        let mut next: Vec<Survivor> = Vec::with_capacity(num_states);
        for s in 0..num_states {
            let input = (s & 1) as u8;
            let preds = [s >> 1, (s >> 1) | (1 << (memory - 1))];
            let mut best: Option<(f64, usize)> = None;
            for &p in &preds {
                let (pred_metric, _) = current[p];
                if !pred_metric.is_finite() {
                    continue;
                }
                let (l0, l1) = spec.output_levels(p as u32, input);
                let d0 = pair[0] - l0;
                let d1 = pair[1] - l1;
                let metric = pred_metric + (d0 * d0 + d1 * d1);
                let take = match best {
                    None => true,
                    Some((best_metric, best_pred)) => {
                        metric < best_metric
                            || (metric == best_metric && current[p].1 < current[best_pred].1)
                    }
                };
                if take {
                    best = Some((metric, p));
                }
            }
            next.push(match best {
                Some((metric, p)) => {
                    let mut bits = current[p].1.clone();
                    bits.push(input);
                    (metric, bits)
                }
                None => (f64::INFINITY, Vec::new()),
            });
        }
        current = next;
    }
    current
}

/// Accumulate the squared-Euclidean metric of one explicit path, in the
/// same step order the trellis sweep uses, so results match bit for bit.
pub(crate) fn path_metric(spec: &ConvCodeSpec, soft: &[f64], bits: &[u8], start: u32) -> f64 {
    assert_eq!(soft.len(), 2 * bits.len());
    let mut state = start;
    let mut metric = 0.0;
    for (pair, &b) in soft.chunks_exact(2).zip(bits) {
        let (l0, l1) = spec.output_levels(state, b);
        let d0 = pair[0] - l0;
        let d1 = pair[1] - l1;
        metric += d0 * d0 + d1 * d1;
        state = spec.next_state(state, b);
    }
    metric
}

/// Maximum-likelihood sequence decoding of a zero-terminated block.
///
/// Finds the minimum squared-Euclidean-distance path from the zero state
/// back to the zero state and returns its input bits (tail positions
/// included, so the result's last `memory` bits are always zero). Exact
/// metric ties resolve to the lexicographically smallest bit string.
pub fn viterbi_mld(spec: &ConvCodeSpec, soft: &[f64]) -> Result<Vec<u8>, ConvCodeError> {
    if soft.len() % 2 != 0 {
        return Err(ConvCodeError::OddSoftLength(soft.len()));
    }
    let steps = soft.len() / 2;
    if steps < spec.memory() {
        return Err(ConvCodeError::TooFewSteps {
            steps,
            memory: spec.memory(),
        });
    }
    let mut init = vec![(f64::INFINITY, Vec::new()); spec.num_states()];
    init[0] = (0.0, Vec::new());
    let survivors = trellis_sweep(spec, soft, init);
    let (metric, bits) = &survivors[0];
    debug_assert!(metric.is_finite(), "the all-zero path always terminates");
    Ok(bits.clone())
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use crate::convdec::code::{append_tail, bpsk_llr_channel, conv_encode, random_bits};
    use crate::sigproc::RngStream;

    use super::super::code::{bpsk_level, ConvCodeSpec};
    use super::*;

    /// Reference decoder: enumerate every information pattern, encode,
    /// and keep the smallest metric (first hit wins, and ascending pattern
    /// order is lexicographic order, so ties resolve identically).
    fn brute_force_mld(spec: &ConvCodeSpec, soft: &[f64], info_len: usize) -> Vec<u8> {
        let mut best: Option<(f64, Vec<u8>)> = None;
        for pattern in 0..(1u64 << info_len) {
            let info: Vec<u8> = (0..info_len)
                .rev()
                .map(|i| ((pattern >> i) & 1) as u8)
                .collect();
            let bits = append_tail(&info, spec);
            let coded = conv_encode(spec, &bits);
            let mut metric = 0.0;
            for (r, &c) in soft.iter().zip(&coded) {
                let d = r - bpsk_level(c);
                metric += d * d;
            }
            let better = match &best {
                None => true,
                Some((bm, _)) => metric < *bm,
            };
            if better {
                best = Some((metric, bits));
            }
        }
        best.expect("at least one candidate").1
    }

    #[test]
    fn noiseless_blocks_decode_exactly() {
        let spec = ConvCodeSpec::default_rate_half();
        let mut rng = RngStream::new(41, 0);
        for _ in 0..100 {
            let bits = append_tail(&random_bits(30, &mut rng), &spec);
            let soft: Vec<f64> = conv_encode(&spec, &bits)
                .iter()
                .map(|&b| bpsk_level(b))
                .collect();
            assert_eq!(viterbi_mld(&spec, &soft).unwrap(), bits);
        }
    }

    #[test]
    fn single_flipped_coded_bit_is_corrected() {
        // Free distance 5 corrects any single hard error.
        let spec = ConvCodeSpec::default_rate_half();
        let bits = append_tail(&[1, 0, 1, 1, 0, 0, 1, 0], &spec);
        let coded = conv_encode(&spec, &bits);
        for flip in 0..coded.len() {
            let soft: Vec<f64> = coded
                .iter()
                .enumerate()
                .map(|(i, &b)| {
                    let l = bpsk_level(b);
                    if i == flip {
                        -l
                    } else {
                        l
                    }
                })
                .collect();
            assert_eq!(
                viterbi_mld(&spec, &soft).unwrap(),
                bits,
                "flip at {flip} must be corrected"
            );
        }
    }

    #[test]
    fn all_zero_soft_input_yields_all_zero_decision() {
        // With a zero soft vector every terminated path has the same
        // metric, so the decision is decided purely by the tie-break.
        let spec = ConvCodeSpec::default_rate_half();
        let soft = vec![0.0; 64];
        assert_eq!(viterbi_mld(&spec, &soft).unwrap(), vec![0u8; 32]);
    }

    #[test]
    fn matches_brute_force_on_noisy_blocks() {
        let spec = ConvCodeSpec::default_rate_half();
        let mut rng = RngStream::new(42, 0);
        for _ in 0..100 {
            let bits = append_tail(&random_bits(8, &mut rng), &spec);
            let coded = conv_encode(&spec, &bits);
            let soft = bpsk_llr_channel(&coded, 0.0, &mut rng);
            let fast = viterbi_mld(&spec, &soft).unwrap();
            let slow = brute_force_mld(&spec, &soft, 8);
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn matches_brute_force_on_a_wider_memory_code() {
        let spec = ConvCodeSpec::new(3, [0o15, 0o17]).unwrap();
        let mut rng = RngStream::new(43, 0);
        for _ in 0..50 {
            let bits = append_tail(&random_bits(6, &mut rng), &spec);
            let coded = conv_encode(&spec, &bits);
            let soft = bpsk_llr_channel(&coded, 1.0, &mut rng);
            assert_eq!(
                viterbi_mld(&spec, &soft).unwrap(),
                brute_force_mld(&spec, &soft, 6)
            );
        }
    }

    #[test]
    fn matches_brute_force_on_quantized_inputs_where_ties_abound() {
        // Coarsely quantized soft values make exact metric ties common;
        // the tie-break must still agree with the reference everywhere.
        let spec = ConvCodeSpec::default_rate_half();
        let mut rng = RngStream::new(44, 0);
        for _ in 0..300 {
            let soft: Vec<f64> = (0..12).map(|_| f64::from(rng.gen_range(-2..=2i8))).collect();
            let fast = viterbi_mld(&spec, &soft).unwrap();
            let slow = brute_force_mld(&spec, &soft, 4);
            assert_eq!(fast, slow, "soft = {soft:?}");
        }
    }

    #[test]
    fn rejects_malformed_inputs() {
        let spec = ConvCodeSpec::default_rate_half();
        assert_eq!(
            viterbi_mld(&spec, &[0.0; 7]).unwrap_err(),
            super::super::code::ConvCodeError::OddSoftLength(7)
        );
        assert_eq!(
            viterbi_mld(&spec, &[0.0; 2]).unwrap_err(),
            super::super::code::ConvCodeError::TooFewSteps { steps: 1, memory: 2 }
        );
    }
}
