use super::code::{ConvCodeError, ConvCodeSpec};
use super::viterbi::{trellis_sweep, Survivor};

/// How a terminated block is split for parallel decoding: `segments` equal
/// pieces of `steps_per_segment` trellis steps each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentPlan {
    segments: usize,
    steps_per_segment: usize,
}

impl SegmentPlan {
    /// Both counts must be at least one.
    pub fn new(segments: usize, steps_per_segment: usize) -> Result<Self, ConvCodeError> {
        if segments == 0 || steps_per_segment == 0 {
            return Err(ConvCodeError::EmptyPlan);
        }
        Ok(Self {
            segments,
            steps_per_segment,
        })
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn steps_per_segment(&self) -> usize {
        self.steps_per_segment
    }

    pub fn total_steps(&self) -> usize {
        self.segments * self.steps_per_segment
    }

    /// Check that a soft vector covers exactly this plan (two values per step).
    pub fn validate_soft_len(&self, soft_len: usize) -> Result<(), ConvCodeError> {
        let expected = 2 * self.total_steps();
        if soft_len != expected {
            return Err(ConvCodeError::PlanMismatch {
                plan: expected,
                got: soft_len,
            });
        }
        Ok(())
    }
}

/// Per-segment transfer table: for every (start state, end state) pair, the
/// best metric over paths through the segment and the input bits achieving
/// it. Unreachable pairs hold an infinite metric and empty bits.
///
/// Tables compose associatively under (min, +): chaining two segments
/// minimizes over the shared mid state, and on exact metric ties keeps the
/// lexicographically smallest concatenated bit string — the same total
/// order the sequential decoder uses, which is what makes composition of
/// per-segment tables reproduce its decisions exactly.
#[derive(Debug, Clone)]
pub struct SegmentTable {
    steps: usize,
    /// Indexed `entries[start][end]`.
    entries: Vec<Vec<Survivor>>,
}

impl SegmentTable {
    /// Build a table from explicit entries. `entries` must be square with a
    /// power-of-two side, and every finite entry must carry `steps` bits.
    pub fn new(steps: usize, entries: Vec<Vec<(f64, Vec<u8>)>>) -> Result<Self, ConvCodeError> {
        if steps == 0 || entries.is_empty() {
            return Err(ConvCodeError::EmptyPlan);
        }
        let states = entries.len();
        assert!(states.is_power_of_two(), "state count must be a power of two");
        for row in &entries {
            if row.len() != states {
                return Err(ConvCodeError::StateCountMismatch(states, row.len()));
            }
            for (metric, bits) in row {
                assert!(
                    !metric.is_finite() || bits.len() == steps,
                    "finite entry must carry one bit per step"
                );
                assert!(!metric.is_nan(), "metrics must be numbers or +inf");
            }
        }
        Ok(Self { steps, entries })
    }

    pub fn num_states(&self) -> usize {
        self.entries.len()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Best metric and bits from `start` to `end`; infinite metric when no
    /// path connects them.
    pub fn entry(&self, start: usize, end: usize) -> (f64, &[u8]) {
        let (metric, bits) = &self.entries[start][end];
        (*metric, bits)
    }

    /// Chain `self` followed by `other`, minimizing over the mid state.
    pub fn compose(&self, other: &SegmentTable) -> Result<SegmentTable, ConvCodeError> {
        let states = self.num_states();
        if states != other.num_states() {
            return Err(ConvCodeError::StateCountMismatch(states, other.num_states()));
        }
        let mut entries = Vec::with_capacity(states);
        for start in 0..states {
            let mut row = Vec::with_capacity(states);
            for end in 0..states {
                let mut best: Option<(f64, usize)> = None;
                for mid in 0..states {
                    let (m1, b1) = &self.entries[start][mid];
                    let (m2, b2) = &other.entries[mid][end];
                    if !m1.is_finite() || !m2.is_finite() {
                        continue;
                    }
                    let metric = m1 + m2;
                    let take = match best {
                        None => true,
                        Some((best_metric, best_mid)) => {
                            if metric < best_metric {
                                true
                            } else if metric == best_metric {
                                let (_, c1) = &self.entries[start][best_mid];
                                let (_, c2) = &other.entries[best_mid][end];
                                lex_less_concat(b1, b2, c1, c2)
                            } else {
                                false
                            }
                        }
                    };
                    if take {
                        best = Some((metric, mid));
                    }
                }
                row.push(match best {
                    Some((metric, mid)) => {
                        let (_, b1) = &self.entries[start][mid];
                        let (_, b2) = &other.entries[mid][end];
                        let mut bits = Vec::with_capacity(self.steps + other.steps);
                        bits.extend_from_slice(b1);
                        bits.extend_from_slice(b2);
                        (metric, bits)
                    }
                    None => (f64::INFINITY, Vec::new()),
                });
            }
            entries.push(row);
        }
        Ok(SegmentTable {
            steps: self.steps + other.steps,
            entries,
        })
    }
}

/// Is `a1 ++ a2` lexicographically smaller than `b1 ++ b2`? All four pieces
/// pairwise equal in length, so no allocation is needed.
fn lex_less_concat(a1: &[u8], a2: &[u8], b1: &[u8], b2: &[u8]) -> bool {
    debug_assert_eq!(a1.len(), b1.len());
    debug_assert_eq!(a2.len(), b2.len());
    match a1.cmp(b1) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => a2 < b2,
    }
}

/// Exact per-segment minimization: one trellis sweep per start state over
/// the segment's soft values (two per step).
pub fn segment_table(spec: &ConvCodeSpec, soft: &[f64]) -> Result<SegmentTable, ConvCodeError> {
    if soft.len() % 2 != 0 {
        return Err(ConvCodeError::OddSoftLength(soft.len()));
    }
    let steps = soft.len() / 2;
    if steps == 0 {
        return Err(ConvCodeError::EmptyPlan);
    }
    let states = spec.num_states();
    let mut entries = Vec::with_capacity(states);
    for start in 0..states {
        let mut init = vec![(f64::INFINITY, Vec::new()); states];
        init[start] = (0.0, Vec::new());
        entries.push(trellis_sweep(spec, soft, init));
    }
    Ok(SegmentTable { steps, entries })
}

/// Fold a chain of per-segment tables and read off the zero-to-zero path.
pub fn merge_segments(tables: &[SegmentTable]) -> Result<Vec<u8>, ConvCodeError> {
    let Some((first, rest)) = tables.split_first() else {
        return Err(ConvCodeError::EmptyPlan);
    };
    let mut chain = first.clone();
    for table in rest {
        chain = chain.compose(table)?;
    }
    let (metric, bits) = chain.entry(0, 0);
    if !metric.is_finite() {
        return Err(ConvCodeError::InfeasibleChain);
    }
    Ok(bits.to_vec())
}

/// Parallel maximum-likelihood decoding: split the block per `plan`, build
/// each segment's exact transfer table, then merge. Decision-identical to
/// [`viterbi_mld`] on the whole block, ties included.
pub fn parallel_mld_decode(
    spec: &ConvCodeSpec,
    plan: &SegmentPlan,
    soft: &[f64],
) -> Result<Vec<u8>, ConvCodeError> {
    plan.validate_soft_len(soft.len())?;
    let tables: Vec<SegmentTable> = soft
        .chunks_exact(2 * plan.steps_per_segment())
        .map(|chunk| segment_table(spec, chunk))
        .collect::<Result<_, _>>()?;
    merge_segments(&tables)
}
