//! Iterative parallel-interference-cancellation baseline.
//!
//! Each user is detected with a conventional receiver chain after
//! derotating by an externally supplied CFO estimate; detected symbols
//! are re-modulated through the true channel and estimated CFO so every
//! user's interference can be subtracted from the others in the next
//! round. All users update in parallel from the previous round's
//! reconstructions, so the first iteration is plain per-user detection.

use num_complex::Complex64;

use super::config::OfdmaError;
use super::scene::{apply_cfo_ramp, convolve_window, ofdma_modulate, OfdmaScene};
use crate::sigproc::{fft, make_constellation, ConstellationKind};

/// Detect all users by iterative parallel interference cancellation.
///
/// `cfo_estimates` holds one estimate per user (typically the center of
/// the true CFO's sub-range so the baseline consumes the same
/// information as the classifier-based receiver). Per iteration and per
/// user: subtract the other users' previous reconstructions, derotate by
/// the estimate, strip the cyclic prefix, FFT, one-tap zero-force the
/// user's own bins with the true channel response, and demap; then
/// rebuild that user's time-domain contribution (channel plus estimated
/// CFO ramp) for the next round.
pub fn pic_baseline_detect(
    scene: &OfdmaScene,
    cfo_estimates: &[f64],
    iterations: usize,
) -> Result<Vec<Vec<u8>>, OfdmaError> {
    let cfg = scene.cfg();
    if cfo_estimates.len() != cfg.users() {
        return Err(OfdmaError::WrongUserCount {
            expected: cfg.users(),
            got: cfo_estimates.len(),
        });
    }
    assert!(iterations >= 1, "at least one cancellation round");

    let constellation = make_constellation(ConstellationKind::Qam16);
    let n = cfg.subcarriers();
    let responses: Vec<Vec<Complex64>> =
        (0..cfg.users()).map(|user| scene.freq_response(user)).collect();

    let mut bits: Vec<Vec<u8>> = vec![Vec::new(); cfg.users()];
    // Previous round's per-user received-domain contributions; empty on
    // round one, which therefore cancels nothing.
    let mut reconstructions: Vec<Vec<Complex64>> = vec![Vec::new(); cfg.users()];

    for _ in 0..iterations {
        let mut round_bits = Vec::with_capacity(cfg.users());
        for user in 0..cfg.users() {
            let mut residual = scene.received().to_vec();
            for (other, recon) in reconstructions.iter().enumerate() {
                if other != user && !recon.is_empty() {
                    for (r, c) in residual.iter_mut().zip(recon) {
                        *r -= c;
                    }
                }
            }
            // Derotate: undo the estimated ramp before demodulating.
            apply_cfo_ramp(&mut residual, -cfo_estimates[user], n);
            let grid = fft(&residual[cfg.cp_len()..]).expect("validated power-of-two length");
            let equalized: Vec<Complex64> = cfg
                .user_bins(user)
                .iter()
                .map(|&bin| {
                    let h = responses[user][bin];
                    if h.norm_sqr() == 0.0 {
                        grid[bin]
                    } else {
                        grid[bin] / h
                    }
                })
                .collect();
            round_bits.push(constellation.demap_nearest(&equalized));
        }

        // Rebuild every user's contribution from this round's decisions.
        let signals = ofdma_modulate(&round_bits, cfg)?;
        reconstructions = (0..cfg.users())
            .map(|user| {
                let mut contribution = convolve_window(&signals[user], &scene.channels()[user]);
                apply_cfo_ramp(&mut contribution, cfo_estimates[user], n);
                contribution
            })
            .collect();
        bits = round_bits;
    }
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::super::config::OfdmaConfig;
    use super::super::scene::{bler_eval, gen_scene, gen_scene_cfo_free};
    use crate::sigproc::RngStream;

    #[test]
    fn zero_cfo_perfect_estimates_recover_noiselessly_in_one_round() {
        let cfg = OfdmaConfig::default_case();
        let mut rng = RngStream::new(61, 0);
        for _ in 0..30 {
            let scene = gen_scene_cfo_free(&cfg, f64::INFINITY, &mut rng);
            let decided = pic_baseline_detect(&scene, &vec![0.0; cfg.users()], 1).unwrap();
            assert_eq!(decided, scene.bits());
        }
    }

    #[test]
    fn more_iterations_do_not_hurt() {
        // With sub-range-center estimates at 15 dB, three cancellation
        // rounds should err at most as often as one (3-sigma slack).
        let cfg = OfdmaConfig::default_case();
        let trials = 4_000;
        let run = |iterations: usize| {
            let mut rng = RngStream::new(62, 0);
            bler_eval(
                |scene| pic_baseline_detect(scene, &scene.subrange_center_estimates(), iterations),
                &cfg,
                &[15.0],
                trials,
                false,
                &mut rng,
            )
            .unwrap()[0]
        };
        let one = run(1);
        let three = run(3);
        let slack = 3.0 * (one.block_errors as f64).sqrt();
        assert!(
            (three.block_errors as f64) <= one.block_errors as f64 + slack,
            "1 round: {one:?}, 3 rounds: {three:?}"
        );
        // And cancellation genuinely fires at this SNR: both runs see
        // offsets, so errors exist to cancel.
        assert!(one.block_errors > 0);
    }

    #[test]
    fn estimate_error_degrades_detection() {
        // Worst-case in-sub-range mismatch (true CFO at a cell edge,
        // estimate at the center) cannot beat exact knowledge.
        let cfg = OfdmaConfig::default_case();
        let trials = 3_000;
        let run = |exact: bool| {
            let mut rng = RngStream::new(63, 0);
            bler_eval(
                |scene| {
                    let estimates = if exact {
                        scene.cfos().to_vec()
                    } else {
                        scene.subrange_center_estimates()
                    };
                    pic_baseline_detect(scene, &estimates, 3)
                },
                &cfg,
                &[15.0],
                trials,
                false,
                &mut rng,
            )
            .unwrap()[0]
        };
        let exact = run(true);
        let centered = run(false);
        let slack = 3.0 * (exact.block_errors as f64).sqrt();
        assert!(
            centered.block_errors as f64 >= exact.block_errors as f64 - slack,
            "exact: {exact:?}, centered: {centered:?}"
        );
    }

    #[test]
    fn rejects_wrong_estimate_count() {
        let cfg = OfdmaConfig::default_case();
        let mut rng = RngStream::new(64, 0);
        let scene = gen_scene(&cfg, 10.0, &mut rng);
        match pic_baseline_detect(&scene, &[0.0; 3], 3) {
            Err(OfdmaError::WrongUserCount { expected: 4, got: 3 }) => {}
            other => panic!("expected WrongUserCount, got {other:?}"),
        }
    }
}
