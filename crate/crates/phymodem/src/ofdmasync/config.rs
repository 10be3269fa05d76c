//! OFDMA system parameters, interleaved subcarrier allocation, and the
//! uniform partition of the CFO range into sub-ranges.

use thiserror::Error;

/// Errors from OFDMA configuration and scene plumbing.
#[derive(Debug, Error, PartialEq)]
pub enum OfdmaError {
    /// The FFT size must be a power of two.
    #[error("subcarrier count {0} is not a power of two")]
    BadSubcarrierCount(usize),
    /// Interleaved allocation needs the user count to divide the FFT size.
    #[error("{users} users do not evenly divide {subcarriers} subcarriers")]
    UsersDontDivide { users: usize, subcarriers: usize },
    /// The cyclic prefix must absorb the full channel memory.
    #[error("cyclic prefix {cp_len} shorter than channel memory {memory}")]
    CpTooShort { cp_len: usize, memory: usize },
    /// The CFO range must be a nonempty symmetric interval.
    #[error("max CFO magnitude {0} must be positive and finite")]
    BadCfoMax(f64),
    /// At least one CFO sub-range is required.
    #[error("sub-range count must be at least 1")]
    NoSubranges,
    /// A bit block had the wrong length for the allocation.
    #[error("expected {expected} bits per user but got {got}")]
    WrongBitCount { expected: usize, got: usize },
    /// Per-user inputs did not match the configured user count.
    #[error("expected {expected} per-user entries but got {got}")]
    WrongUserCount { expected: usize, got: usize },
    /// A per-user vector had the wrong length for the configuration.
    #[error("expected {what} of length {expected} but got {got}")]
    WrongLength {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// The CFO-free reference only accepts scenes with zero CFO.
    #[error("CFO-free reference called on a scene with nonzero CFO {0}")]
    NonzeroCfo(f64),
    /// A detection bank did not match the configuration shape.
    #[error("detector bank mismatch: {0}")]
    BankShape(String),
}

/// Parameters of the interleaved multiuser OFDMA uplink.
///
/// All users share one `subcarriers`-point OFDM symbol with a cyclic
/// prefix of `cp_len` samples; user `k` owns bins `{k, k + users, ...}`.
/// Each user's normalized CFO lies in `[-cfo_max, cfo_max]`, split into
/// `subranges` equal sub-ranges for the classify-then-detect receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmaConfig {
    subcarriers: usize,
    users: usize,
    cp_len: usize,
    num_taps: usize,
    cfo_max: f64,
    subranges: usize,
}

impl OfdmaConfig {
    /// Validates and builds a configuration.
    pub fn new(
        subcarriers: usize,
        users: usize,
        cp_len: usize,
        num_taps: usize,
        cfo_max: f64,
        subranges: usize,
    ) -> Result<Self, OfdmaError> {
        if subcarriers == 0 || !subcarriers.is_power_of_two() {
            return Err(OfdmaError::BadSubcarrierCount(subcarriers));
        }
        if users == 0 || subcarriers % users != 0 {
            return Err(OfdmaError::UsersDontDivide { users, subcarriers });
        }
        if num_taps == 0 || cp_len < num_taps - 1 {
            return Err(OfdmaError::CpTooShort {
                cp_len,
                memory: num_taps.saturating_sub(1),
            });
        }
        if !(cfo_max > 0.0) || !cfo_max.is_finite() {
            return Err(OfdmaError::BadCfoMax(cfo_max));
        }
        if subranges == 0 {
            return Err(OfdmaError::NoSubranges);
        }
        Ok(Self {
            subcarriers,
            users,
            cp_len,
            num_taps,
            cfo_max,
            subranges,
        })
    }

    /// The 32-subcarrier, 4-user case studied throughout: cyclic prefix 8,
    /// 8-tap channels, CFOs in ±0.4 split into 8 sub-ranges.
    pub fn default_case() -> Self {
        Self::new(32, 4, 8, 8, 0.4, 8).expect("default parameters are valid")
    }

    /// FFT size / number of subcarriers.
    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    /// Number of users sharing the symbol.
    pub fn users(&self) -> usize {
        self.users
    }

    /// Cyclic prefix length in samples.
    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    /// Number of channel taps per user.
    pub fn num_taps(&self) -> usize {
        self.num_taps
    }

    /// Maximum normalized CFO magnitude.
    pub fn cfo_max(&self) -> f64 {
        self.cfo_max
    }

    /// Number of equal CFO sub-ranges.
    pub fn subranges(&self) -> usize {
        self.subranges
    }

    /// Subcarriers owned by one user, ascending: `{k, k + K, ...}`.
    pub fn user_bins(&self, user: usize) -> Vec<usize> {
        assert!(user < self.users, "user index out of range");
        (user..self.subcarriers).step_by(self.users).collect()
    }

    /// 16-QAM symbols carried by each user in one OFDM symbol.
    pub fn symbols_per_user(&self) -> usize {
        self.subcarriers / self.users
    }

    /// Information bits per user per OFDM symbol (4 bits per 16-QAM symbol).
    pub fn bits_per_user(&self) -> usize {
        4 * self.symbols_per_user()
    }

    /// Samples in one transmitted symbol including the cyclic prefix.
    pub fn window_len(&self) -> usize {
        self.subcarriers + self.cp_len
    }

    /// Width of one CFO sub-range.
    pub fn subrange_width(&self) -> f64 {
        2.0 * self.cfo_max / self.subranges as f64
    }

    /// Index of the sub-range containing `cfo`.
    ///
    /// The range `[-cfo_max, cfo_max]` splits into `subranges` half-open
    /// cells `[lo, lo + width)`; the top endpoint `+cfo_max` belongs to the
    /// last cell. Values outside the range clamp to the nearest cell.
    pub fn subrange_index(&self, cfo: f64) -> usize {
        let raw = ((cfo + self.cfo_max) / self.subrange_width()).floor();
        if raw < 0.0 {
            0
        } else {
            (raw as usize).min(self.subranges - 1)
        }
    }

    /// Center CFO of sub-range `q`.
    pub fn subrange_center(&self, q: usize) -> f64 {
        assert!(q < self.subranges, "sub-range index out of range");
        -self.cfo_max + (q as f64 + 0.5) * self.subrange_width()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_case_shape() {
        let cfg = OfdmaConfig::default_case();
        assert_eq!(cfg.subcarriers(), 32);
        assert_eq!(cfg.users(), 4);
        assert_eq!(cfg.cp_len(), 8);
        assert_eq!(cfg.num_taps(), 8);
        assert_eq!(cfg.cfo_max(), 0.4);
        assert_eq!(cfg.subranges(), 8);
        assert_eq!(cfg.symbols_per_user(), 8);
        assert_eq!(cfg.bits_per_user(), 32);
        assert_eq!(cfg.window_len(), 40);
    }

    #[test]
    fn interleaved_allocation_partitions_bins() {
        let cfg = OfdmaConfig::default_case();
        assert_eq!(cfg.user_bins(0), vec![0, 4, 8, 12, 16, 20, 24, 28]);
        assert_eq!(cfg.user_bins(3), vec![3, 7, 11, 15, 19, 23, 27, 31]);
        let mut all: Vec<usize> = (0..4).flat_map(|k| cfg.user_bins(k)).collect();
        all.sort_unstable();
        assert_eq!(all, (0..32).collect::<Vec<_>>());
    }

    #[test]
    fn subrange_boundaries() {
        let cfg = OfdmaConfig::default_case();
        // Width 0.1; zero CFO falls in the cell just above the midpoint.
        assert_eq!(cfg.subrange_index(0.0), 4);
        assert_eq!(cfg.subrange_index(-0.4), 0);
        assert_eq!(cfg.subrange_index(0.4), 7);
        assert_eq!(cfg.subrange_index(-0.301), 0);
        assert_eq!(cfg.subrange_index(-0.299), 1);
        assert_eq!(cfg.subrange_index(0.399), 7);
        // Clamping for values nudged past the ends by roundoff.
        assert_eq!(cfg.subrange_index(-0.41), 0);
        assert_eq!(cfg.subrange_index(0.41), 7);
    }

    #[test]
    fn subrange_centers() {
        let cfg = OfdmaConfig::default_case();
        assert!((cfg.subrange_center(0) - (-0.35)).abs() < 1e-12);
        assert!((cfg.subrange_center(4) - 0.05).abs() < 1e-12);
        assert!((cfg.subrange_center(7) - 0.35).abs() < 1e-12);
        // Every center classifies back to its own sub-range.
        for q in 0..cfg.subranges() {
            assert_eq!(cfg.subrange_index(cfg.subrange_center(q)), q);
        }
    }

    #[test]
    fn validation_rejects_bad_shapes() {
        assert_eq!(
            OfdmaConfig::new(30, 4, 8, 8, 0.4, 8),
            Err(OfdmaError::BadSubcarrierCount(30))
        );
        assert_eq!(
            OfdmaConfig::new(32, 5, 8, 8, 0.4, 8),
            Err(OfdmaError::UsersDontDivide {
                users: 5,
                subcarriers: 32
            })
        );
        assert_eq!(
            OfdmaConfig::new(32, 4, 6, 8, 0.4, 8),
            Err(OfdmaError::CpTooShort {
                cp_len: 6,
                memory: 7
            })
        );
        assert_eq!(
            OfdmaConfig::new(32, 4, 8, 8, 0.0, 8),
            Err(OfdmaError::BadCfoMax(0.0))
        );
        assert_eq!(
            OfdmaConfig::new(32, 4, 8, 8, 0.4, 0),
            Err(OfdmaError::NoSubranges)
        );
    }
}
