//! Decision helpers for Monte Carlo comparisons: binomial three-sigma
//! orderings and waterfall-crossing interpolation.

/// An error count out of a total — one measured error rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RatePoint {
    pub errors: u64,
    pub total: u64,
}

impl RatePoint {
    pub fn new(errors: u64, total: u64) -> Self {
        assert!(total > 0, "a rate needs at least one trial");
        assert!(errors <= total, "more errors than trials");
        RatePoint { errors, total }
    }

    pub fn rate(&self) -> f64 {
        self.errors as f64 / self.total as f64
    }

    /// Binomial standard error of the measured rate.
    fn sigma(&self) -> f64 {
        let p = self.rate();
        (p * (1.0 - p) / self.total as f64).sqrt()
    }
}

/// Whether `a`'s rate is at or below `b`'s within three combined standard
/// errors — the ordering check "a ≤ b, 3σ".
///
/// The complement gives the strict test: `!rate_le_3sigma(b, a)` says `a`
/// is *significantly below* `b` (a three-sigma win for `a`).
pub fn rate_le_3sigma(a: RatePoint, b: RatePoint) -> bool {
    let slack = 3.0 * (a.sigma().powi(2) + b.sigma().powi(2)).sqrt();
    a.rate() <= b.rate() + slack
}

/// Eb/N0 at which a descending error-rate curve crosses `target`,
/// interpolating linearly in (dB, log10 rate) between grid points.
///
/// `points` are `(ebn0_db, rate)` sorted ascending in dB. The first
/// segment that straddles the target from above is used. A zero rate on
/// the lower side cannot be placed on the log axis, so the segment's
/// right endpoint is returned — a deliberately late (conservative)
/// estimate. Returns `None` when the curve never reaches the target
/// inside the grid, or already starts at or below it (the crossing would
/// lie outside the measured range).
pub fn crossing_db(points: &[(f64, f64)], target: f64) -> Option<f64> {
    assert!(target > 0.0, "crossing target must be positive");
    if points.first().map(|&(_, r)| r <= target).unwrap_or(true) {
        return None;
    }
    for pair in points.windows(2) {
        let (d0, r0) = pair[0];
        let (d1, r1) = pair[1];
        assert!(d1 > d0, "grid must ascend");
        if r0 > target && target >= r1 {
            if r1 <= 0.0 {
                return Some(d1);
            }
            let span = r0.log10() - r1.log10();
            if span <= 0.0 {
                return Some(d1);
            }
            let frac = (r0.log10() - target.log10()) / span;
            return Some(d0 + frac * (d1 - d0));
        }
    }
    None
}
