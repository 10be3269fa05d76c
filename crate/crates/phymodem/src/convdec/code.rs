use rand::Rng;

use crate::sigproc::{awgn_real, noise_var, RngStream, Signaling, SnrSpec};

/// Convolutional code errors.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConvCodeError {
    #[error("memory must be in 1..=12, got {0}")]
    BadMemory(usize),
    #[error("generator {index} (octal {octal:o}) does not fit memory {memory} or lacks a delay-free tap")]
    BadGenerator {
        index: usize,
        octal: u32,
        memory: usize,
    },
    #[error("soft vector length {0} is not an even number of coded bits")]
    OddSoftLength(usize),
    #[error("trellis needs at least {memory} steps to terminate, got {steps}")]
    TooFewSteps { steps: usize, memory: usize },
    #[error("segment plan expects {plan} soft values but got {got}")]
    PlanMismatch { plan: usize, got: usize },
    #[error("segment plan needs at least one segment of at least one step")]
    EmptyPlan,
    #[error("segment tables disagree on state count ({0} vs {1})")]
    StateCountMismatch(usize, usize),
    #[error("no feasible state chain from the zero state back to the zero state")]
    InfeasibleChain,
}

/// A rate-1/2 nonrecursive convolutional code.
///
/// `memory` is the number of delay elements; generators are given in the
/// conventional octal notation, most significant bit acting on the current
/// input (so octal 5 = binary 101 = taps 1 + D²). Both generators must be
/// delay-free (current-input tap set).
#[derive(Debug, Clone)]
pub struct ConvCodeSpec {
    memory: usize,
    generators_octal: [u32; 2],
    /// `outputs[state][input]` packs the two coded bits as bit1|bit0.
    outputs: Vec<[u8; 2]>,
    /// `next[state][input]`.
    next: Vec<[u32; 2]>,
}

impl ConvCodeSpec {
    /// Build a code from its memory and two octal generators.
    pub fn new(memory: usize, generators_octal: [u32; 2]) -> Result<Self, ConvCodeError> {
        if memory == 0 || memory > 12 {
            return Err(ConvCodeError::BadMemory(memory));
        }
        let width = memory + 1;
        let mut taps = [0u32; 2];
        for (index, &g) in generators_octal.iter().enumerate() {
            if g == 0 || g >= (1 << width) {
                return Err(ConvCodeError::BadGenerator {
                    index,
                    octal: g,
                    memory,
                });
            }
            // MSB-first: tap i multiplies the input from i steps ago.
            // Delay-free means tap 0 (the MSB at width-1) is set.
            if (g >> memory) & 1 == 0 {
                return Err(ConvCodeError::BadGenerator {
                    index,
                    octal: g,
                    memory,
                });
            }
            taps[index] = g;
        }

        // State convention: bit i-1 of the state is the input from i steps
        // ago, so a transition is new_state = ((state << 1) | input) & mask.
        let num_states = 1usize << memory;
        let mask = (num_states - 1) as u32;
        let mut outputs = vec![[0u8; 2]; num_states];
        let mut next = vec![[0u32; 2]; num_states];
        for state in 0..num_states as u32 {
            for input in 0..2u32 {
                // The shift register seen by the taps: current input in the
                // MSB position, oldest input in the LSB.
                let mut register = input << memory;
                for age in 1..=memory {
                    let bit = (state >> (age - 1)) & 1;
                    register |= bit << (memory - age);
                }
                let mut coded = 0u8;
                for (gi, &g) in taps.iter().enumerate() {
                    let parity = (register & g).count_ones() & 1;
                    coded |= (parity as u8) << gi;
                }
                outputs[state as usize][input as usize] = coded;
                next[state as usize][input as usize] = ((state << 1) | input) & mask;
            }
        }

        Ok(Self {
            memory,
            generators_octal,
            outputs,
            next,
        })
    }

    /// The default short code: memory 2, generators (5, 7) octal.
    pub fn default_rate_half() -> Self {
        Self::new(2, [0o5, 0o7]).expect("default code is valid")
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn generators_octal(&self) -> [u32; 2] {
        self.generators_octal
    }

    pub fn num_states(&self) -> usize {
        1 << self.memory
    }

    /// Successor state for one input bit.
    pub fn next_state(&self, state: u32, input: u8) -> u32 {
        self.next[state as usize][input as usize]
    }

    /// The two coded bits emitted by (state, input).
    pub fn output_bits(&self, state: u32, input: u8) -> (u8, u8) {
        let packed = self.outputs[state as usize][input as usize];
        (packed & 1, (packed >> 1) & 1)
    }

    /// The two coded bits mapped to antipodal levels (bit 0 -> +1).
    pub fn output_levels(&self, state: u32, input: u8) -> (f64, f64) {
        let (b0, b1) = self.output_bits(state, input);
        (bpsk_level(b0), bpsk_level(b1))
    }

    /// Encode `bits` starting from `start` without termination; returns the
    /// coded bits and the final state.
    pub fn encode_from_state(&self, bits: &[u8], start: u32) -> (Vec<u8>, u32) {
        assert!((start as usize) < self.num_states(), "state out of range");
        let mut coded = Vec::with_capacity(bits.len() * 2);
        let mut state = start;
        for &b in bits {
            assert!(b <= 1, "bits must be 0 or 1");
            let (c0, c1) = self.output_bits(state, b);
            coded.push(c0);
            coded.push(c1);
            state = self.next_state(state, b);
        }
        (coded, state)
    }
}

/// Antipodal level for one bit: 0 -> +1, 1 -> -1.
pub(crate) fn bpsk_level(bit: u8) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Append the `memory` zero tail bits that drive the encoder back to the
/// zero state.
pub fn append_tail(info: &[u8], spec: &ConvCodeSpec) -> Vec<u8> {
    let mut bits = Vec::with_capacity(info.len() + spec.memory());
    bits.extend_from_slice(info);
    bits.resize(info.len() + spec.memory(), 0);
    bits
}

/// Encode a zero-terminated block. The input must already carry its zero
/// tail (see [`append_tail`]); encoding starts and ends in the zero state.
pub fn conv_encode(spec: &ConvCodeSpec, bits_with_tail: &[u8]) -> Vec<u8> {
    assert!(
        bits_with_tail.len() >= spec.memory(),
        "block shorter than the tail itself"
    );
    assert!(
        bits_with_tail[bits_with_tail.len() - spec.memory()..]
            .iter()
            .all(|&b| b == 0),
        "input must end with {} zero tail bits",
        spec.memory()
    );
    let (coded, end) = spec.encode_from_state(bits_with_tail, 0);
    debug_assert_eq!(end, 0, "zero tail must return the register to zero");
    coded
}

/// Map coded bits to antipodal levels and add real AWGN at the variance
/// implied by Eb/N0 for a rate-1/2 binary code.
pub fn bpsk_llr_channel(coded: &[u8], ebn0_db: f64, rng: &mut RngStream) -> Vec<f64> {
    let var = noise_var(&SnrSpec::new(ebn0_db, 1, 0.5, Signaling::Real));
    let levels: Vec<f64> = coded.iter().map(|&b| bpsk_level(b)).collect();
    awgn_real(&levels, var, rng)
}

/// Draw `len` uniform information bits.
pub fn random_bits(len: usize, rng: &mut RngStream) -> Vec<u8> {
    (0..len).map(|_| rng.gen_range(0..=1u8)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rejects_bad_parameters() {
        assert_eq!(
            ConvCodeSpec::new(0, [1, 1]).unwrap_err(),
            ConvCodeError::BadMemory(0)
        );
        assert_eq!(
            ConvCodeSpec::new(13, [1, 1]).unwrap_err(),
            ConvCodeError::BadMemory(13)
        );
        // Octal 3 = binary 011: no delay-free tap for memory 2.
        assert!(matches!(
            ConvCodeSpec::new(2, [0o3, 0o7]).unwrap_err(),
            ConvCodeError::BadGenerator { index: 0, .. }
        ));
        // Generator wider than memory+1 bits.
        assert!(matches!(
            ConvCodeSpec::new(2, [0o15, 0o7]).unwrap_err(),
            ConvCodeError::BadGenerator { index: 0, .. }
        ));
    }

    #[test]
    fn impulse_response_traces_the_generators() {
        // Encoding 1 followed by the zero tail emits the taps of both
        // generators interleaved: (5,7) octal -> 11 01 11.
        let spec = ConvCodeSpec::default_rate_half();
        let coded = conv_encode(&spec, &[1, 0, 0]);
        assert_eq!(coded, vec![1, 1, 0, 1, 1, 1]);
    }

    #[test]
    fn encoder_is_linear_over_gf2() {
        let spec = ConvCodeSpec::default_rate_half();
        let mut rng = RngStream::new(31, 0);
        for _ in 0..200 {
            let a = append_tail(&random_bits(10, &mut rng), &spec);
            let b = append_tail(&random_bits(10, &mut rng), &spec);
            let xor: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
            let ca = conv_encode(&spec, &a);
            let cb = conv_encode(&spec, &b);
            let cx = conv_encode(&spec, &xor);
            let expected: Vec<u8> = ca.iter().zip(&cb).map(|(x, y)| x ^ y).collect();
            assert_eq!(cx, expected);
        }
    }

    #[test]
    fn append_tail_pads_with_memory_zeros() {
        let spec = ConvCodeSpec::default_rate_half();
        let padded = append_tail(&[1, 0, 1], &spec);
        assert_eq!(padded, vec![1, 0, 1, 0, 0]);
        let (_, end) = spec.encode_from_state(&padded, 0);
        assert_eq!(end, 0);
    }

    #[test]
    fn default_block_geometry_is_thirty_plus_two_in_sixty_four() {
        // A 64-bit codeword at rate 1/2 spans 32 trellis steps; memory 2
        // leaves 30 information positions.
        let spec = ConvCodeSpec::default_rate_half();
        let codeword_bits = 64;
        let steps = codeword_bits / 2;
        let info = steps - spec.memory();
        assert_eq!(info, 30);
        let coded = conv_encode(&spec, &append_tail(&vec![1; info], &spec));
        assert_eq!(coded.len(), codeword_bits);
    }

    #[test]
    fn wide_memory_code_terminates_too() {
        // Memory-6 generators (133, 171) octal.
        let spec = ConvCodeSpec::new(6, [0o133, 0o171]).unwrap();
        assert_eq!(spec.num_states(), 64);
        let mut rng = RngStream::new(32, 0);
        let bits = append_tail(&random_bits(20, &mut rng), &spec);
        let coded = conv_encode(&spec, &bits);
        assert_eq!(coded.len(), bits.len() * 2);
    }

    #[test]
    fn channel_output_tracks_requested_noise_level() {
        let spec = ConvCodeSpec::default_rate_half();
        let bits = append_tail(&vec![0; 3000], &spec);
        let coded = conv_encode(&spec, &bits);
        let mut rng = RngStream::new(33, 0);
        let soft = bpsk_llr_channel(&coded, 4.0, &mut rng);
        // All-zero input maps to +1 levels; the residual is the noise.
        let var = noise_var(&SnrSpec::new(4.0, 1, 0.5, Signaling::Real));
        let emp: f64 =
            soft.iter().map(|r| (r - 1.0) * (r - 1.0)).sum::<f64>() / soft.len() as f64;
        assert!(
            (emp - var).abs() < 0.05 * var,
            "empirical {emp} vs requested {var}"
        );
    }
}
