//! OFDMA waveform synthesis: modulation, multipath + CFO composition,
//! the CFO-free zero-forcing reference, and block-error evaluation.
//!
//! Conventions: the forward FFT is unnormalized and the inverse carries
//! 1/N, so a unit-energy subcarrier symbol contributes 1/N per-sample
//! time power and time-domain noise of variance `v` appears per bin with
//! variance `N·v`. Eb/N0 is accounted per subcarrier (4 bits per 16-QAM
//! symbol, unit symbol energy, unit-power channels); the cyclic-prefix
//! overhead is not charged to Eb.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

use super::config::{OfdmaConfig, OfdmaError};
use crate::sigproc::{
    awgn, fft, ifft, make_constellation, noise_var, Constellation, ConstellationKind, RngStream,
    Signaling, SnrSpec,
};

/// One synthesized uplink observation with its ground truth.
#[derive(Debug, Clone)]
pub struct OfdmaScene {
    cfg: OfdmaConfig,
    /// Per-user information bits, 4 per occupied subcarrier.
    bits: Vec<Vec<u8>>,
    /// Per-user frequency-domain symbols on that user's bins, ascending.
    symbols: Vec<Vec<Complex64>>,
    /// Per-user channel impulse responses.
    channels: Vec<Vec<Complex64>>,
    /// Per-user normalized CFOs.
    cfos: Vec<f64>,
    /// Composite received window of `N + cp_len` samples.
    received: Vec<Complex64>,
    /// Total complex noise variance per time sample.
    n0: f64,
}

impl OfdmaScene {
    pub fn cfg(&self) -> &OfdmaConfig {
        &self.cfg
    }

    pub fn bits(&self) -> &[Vec<u8>] {
        &self.bits
    }

    pub fn symbols(&self) -> &[Vec<Complex64>] {
        &self.symbols
    }

    pub fn channels(&self) -> &[Vec<Complex64>] {
        &self.channels
    }

    pub fn cfos(&self) -> &[f64] {
        &self.cfos
    }

    pub fn received(&self) -> &[Complex64] {
        &self.received
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    /// Full-grid frequency response of one user's channel.
    pub fn freq_response(&self, user: usize) -> Vec<Complex64> {
        user_freq_response(&self.cfg, &self.channels[user])
    }

    /// Center of the true CFO's sub-range, per user — the estimate an
    /// ideal sub-range classifier hands the cancellation baseline.
    pub fn subrange_center_estimates(&self) -> Vec<f64> {
        self.cfos
            .iter()
            .map(|&e| self.cfg.subrange_center(self.cfg.subrange_index(e)))
            .collect()
    }
}

fn qam16() -> Constellation {
    make_constellation(ConstellationKind::Qam16)
}

/// Per-sample complex noise variance realizing `ebn0_db` for this system.
///
/// Per-bin noise variance after the unnormalized forward FFT must be
/// N0 = 1 / (4 · 10^(γ/10)) for unit-energy 16-QAM on unit-power
/// channels, so the time-domain variance is N0 / N.
pub fn time_noise_var(cfg: &OfdmaConfig, ebn0_db: f64) -> f64 {
    noise_var(&SnrSpec::new(ebn0_db, 4, 1.0, Signaling::Complex)) / cfg.subcarriers() as f64
}

/// Map each user's bits to its time-domain transmit signal.
///
/// Bits group into 16-QAM symbols placed on the user's interleaved bins
/// (zeros elsewhere), inverse-transformed, and prefixed with the last
/// `cp_len` samples as a cyclic prefix.
pub fn ofdma_modulate(
    bits_per_user: &[Vec<u8>],
    cfg: &OfdmaConfig,
) -> Result<Vec<Vec<Complex64>>, OfdmaError> {
    if bits_per_user.len() != cfg.users() {
        return Err(OfdmaError::WrongUserCount {
            expected: cfg.users(),
            got: bits_per_user.len(),
        });
    }
    let constellation = qam16();
    let n = cfg.subcarriers();
    let mut signals = Vec::with_capacity(cfg.users());
    for (user, bits) in bits_per_user.iter().enumerate() {
        if bits.len() != cfg.bits_per_user() {
            return Err(OfdmaError::WrongBitCount {
                expected: cfg.bits_per_user(),
                got: bits.len(),
            });
        }
        let symbols = constellation.map_bits(bits);
        let mut grid = vec![Complex64::new(0.0, 0.0); n];
        for (&bin, &sym) in cfg.user_bins(user).iter().zip(&symbols) {
            grid[bin] = sym;
        }
        let body = ifft(&grid).expect("validated power-of-two length");
        let mut signal = Vec::with_capacity(cfg.window_len());
        signal.extend_from_slice(&body[n - cfg.cp_len()..]);
        signal.extend_from_slice(&body);
        signals.push(signal);
    }
    Ok(signals)
}

/// Linear convolution of `signal` with `taps`, truncated to the window:
/// the tail that spills past the window belongs to the next symbol and
/// is dropped, while the cyclic prefix absorbs the startup transient.
pub(crate) fn convolve_window(signal: &[Complex64], taps: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); signal.len()];
    for (n, slot) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (l, &h) in taps.iter().enumerate() {
            if l > n {
                break;
            }
            acc += h * signal[n - l];
        }
        *slot = acc;
    }
    out
}

/// Multiply by the CFO phase ramp exp(j 2π ε n / N) across the window.
pub(crate) fn apply_cfo_ramp(signal: &mut [Complex64], cfo: f64, subcarriers: usize) {
    for (n, s) in signal.iter_mut().enumerate() {
        let phase = 2.0 * PI * cfo * n as f64 / subcarriers as f64;
        *s *= Complex64::from_polar(1.0, phase);
    }
}

/// Superimpose all users through their channels and CFO ramps plus AWGN.
///
/// Each user's signal is linearly convolved with its channel, multiplied
/// by its CFO ramp over the full `N + cp_len` window, and summed; complex
/// noise of total variance `n0` is added unless `n0` is zero (an infinite
/// Eb/N0 point draws nothing from `rng`). The per-user bits and symbols
/// recorded in the scene are read back from the clean inputs, so the
/// signals are expected to come from [`ofdma_modulate`].
pub fn compose_received(
    cfg: &OfdmaConfig,
    signals: &[Vec<Complex64>],
    channels: &[Vec<Complex64>],
    cfos: &[f64],
    n0: f64,
    rng: &mut RngStream,
) -> Result<OfdmaScene, OfdmaError> {
    let users = cfg.users();
    for got in [signals.len(), channels.len(), cfos.len()] {
        if got != users {
            return Err(OfdmaError::WrongUserCount {
                expected: users,
                got,
            });
        }
    }
    for signal in signals {
        if signal.len() != cfg.window_len() {
            return Err(OfdmaError::WrongLength {
                what: "time signal",
                expected: cfg.window_len(),
                got: signal.len(),
            });
        }
    }
    for taps in channels {
        if taps.len() != cfg.num_taps() {
            return Err(OfdmaError::WrongLength {
                what: "channel",
                expected: cfg.num_taps(),
                got: taps.len(),
            });
        }
    }
    assert!(n0.is_finite() && n0 >= 0.0, "noise variance must be finite and nonnegative");

    let mut clean = vec![Complex64::new(0.0, 0.0); cfg.window_len()];
    for user in 0..users {
        let mut contribution = convolve_window(&signals[user], &channels[user]);
        apply_cfo_ramp(&mut contribution, cfos[user], cfg.subcarriers());
        for (acc, c) in clean.iter_mut().zip(&contribution) {
            *acc += c;
        }
    }
    let received = if n0 > 0.0 {
        awgn(&clean, n0, rng)
    } else {
        clean
    };

    // Ground truth read back from the clean per-user transmit signals.
    let constellation = qam16();
    let mut bits = Vec::with_capacity(users);
    let mut symbols = Vec::with_capacity(users);
    for user in 0..users {
        let grid = fft(&signals[user][cfg.cp_len()..]).expect("validated power-of-two length");
        let on_bins: Vec<Complex64> = cfg.user_bins(user).iter().map(|&b| grid[b]).collect();
        let user_bits = constellation.demap_nearest(&on_bins);
        symbols.push(constellation.map_bits(&user_bits));
        bits.push(user_bits);
    }

    Ok(OfdmaScene {
        cfg: cfg.clone(),
        bits,
        symbols,
        channels: channels.to_vec(),
        cfos: cfos.to_vec(),
        received,
        n0,
    })
}

/// One Rayleigh channel draw: i.i.d. complex Gaussian taps with uniform
/// power delay profile summing to unit average power.
pub(crate) fn draw_channel(cfg: &OfdmaConfig, rng: &mut RngStream) -> Vec<Complex64> {
    let scale = (1.0 / (2.0 * cfg.num_taps() as f64)).sqrt();
    (0..cfg.num_taps())
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * scale, im * scale)
        })
        .collect()
}

fn gen_scene_with_cfos(
    cfg: &OfdmaConfig,
    ebn0_db: f64,
    zero_cfo: bool,
    rng: &mut RngStream,
) -> OfdmaScene {
    // Draw order is fixed for reproducibility: bits, channels, CFOs, noise.
    let bits: Vec<Vec<u8>> = (0..cfg.users())
        .map(|_| (0..cfg.bits_per_user()).map(|_| rng.gen_range(0..=1u8)).collect())
        .collect();
    let channels: Vec<Vec<Complex64>> = (0..cfg.users()).map(|_| draw_channel(cfg, rng)).collect();
    let cfos: Vec<f64> = if zero_cfo {
        vec![0.0; cfg.users()]
    } else {
        (0..cfg.users())
            .map(|_| rng.gen_range(-cfg.cfo_max()..=cfg.cfo_max()))
            .collect()
    };
    let signals = ofdma_modulate(&bits, cfg).expect("generated bits match the allocation");
    compose_received(cfg, &signals, &channels, &cfos, time_noise_var(cfg, ebn0_db), rng)
        .expect("generated dimensions are consistent")
}

/// Draw a full random scene: uniform bits, Rayleigh channels, CFOs
/// uniform over the configured range, noise at the given Eb/N0.
pub fn gen_scene(cfg: &OfdmaConfig, ebn0_db: f64, rng: &mut RngStream) -> OfdmaScene {
    gen_scene_with_cfos(cfg, ebn0_db, false, rng)
}

/// Like [`gen_scene`] but with every CFO pinned to zero, for the
/// offset-free reference curve.
pub fn gen_scene_cfo_free(cfg: &OfdmaConfig, ebn0_db: f64, rng: &mut RngStream) -> OfdmaScene {
    gen_scene_with_cfos(cfg, ebn0_db, true, rng)
}

/// Frequency response of a channel on the full subcarrier grid.
pub fn user_freq_response(cfg: &OfdmaConfig, taps: &[Complex64]) -> Vec<Complex64> {
    assert!(taps.len() <= cfg.subcarriers(), "channel longer than the FFT");
    let mut padded = taps.to_vec();
    padded.resize(cfg.subcarriers(), Complex64::new(0.0, 0.0));
    fft(&padded).expect("validated power-of-two length")
}

/// Demap one user's bins from a frequency-domain grid after one-tap
/// zero-forcing with the true channel response.
fn zero_force_user(
    cfg: &OfdmaConfig,
    grid: &[Complex64],
    response: &[Complex64],
    user: usize,
) -> Vec<u8> {
    let constellation = qam16();
    let equalized: Vec<Complex64> = cfg
        .user_bins(user)
        .iter()
        .map(|&bin| {
            let h = response[bin];
            // A singular bin (probability zero under Rayleigh fading) is
            // passed through rather than divided to keep outputs finite.
            if h.norm_sqr() == 0.0 {
                grid[bin]
            } else {
                grid[bin] / h
            }
        })
        .collect();
    constellation.demap_nearest(&equalized)
}

/// Ideal-synchronization reference: requires every CFO to be exactly
/// zero, then recovers each user by cp removal, FFT, one-tap
/// zero-forcing on its own bins, and nearest-symbol demapping.
pub fn cfo_free_reference(scene: &OfdmaScene) -> Result<Vec<Vec<u8>>, OfdmaError> {
    if let Some(&bad) = scene.cfos().iter().find(|&&e| e != 0.0) {
        return Err(OfdmaError::NonzeroCfo(bad));
    }
    let cfg = scene.cfg();
    let grid = fft(&scene.received()[cfg.cp_len()..]).expect("validated power-of-two length");
    Ok((0..cfg.users())
        .map(|user| zero_force_user(cfg, &grid, &scene.freq_response(user), user))
        .collect())
}

/// One Eb/N0 point of a block-error sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlerPoint {
    pub ebn0_db: f64,
    pub block_errors: u64,
    pub blocks: u64,
}

impl BlerPoint {
    pub fn bler(&self) -> f64 {
        self.block_errors as f64 / self.blocks as f64
    }
}

/// Monte Carlo block-error evaluation of a detector over an Eb/N0 grid.
///
/// A block is one user's symbols within one OFDM symbol; it errs if any
/// of its bits is wrong, and the rate averages over users and trials.
/// With `zero_cfo` set the scenes carry no offsets (the reference
/// detector rejects anything else). Deterministic for a fixed `rng`
/// state: points consume draws in grid order.
pub fn bler_eval<F>(
    mut detect: F,
    cfg: &OfdmaConfig,
    ebn0_grid: &[f64],
    trials: usize,
    zero_cfo: bool,
    rng: &mut RngStream,
) -> Result<Vec<BlerPoint>, OfdmaError>
where
    F: FnMut(&OfdmaScene) -> Result<Vec<Vec<u8>>, OfdmaError>,
{
    assert!(trials >= 1, "at least one trial per point");
    let mut points = Vec::with_capacity(ebn0_grid.len());
    for &ebn0_db in ebn0_grid {
        let mut block_errors = 0u64;
        let mut blocks = 0u64;
        for _ in 0..trials {
            let scene = gen_scene_with_cfos(cfg, ebn0_db, zero_cfo, rng);
            let decided = detect(&scene)?;
            if decided.len() != cfg.users() {
                return Err(OfdmaError::WrongUserCount {
                    expected: cfg.users(),
                    got: decided.len(),
                });
            }
            for (user, block) in decided.iter().enumerate() {
                if block.len() != cfg.bits_per_user() {
                    return Err(OfdmaError::WrongBitCount {
                        expected: cfg.bits_per_user(),
                        got: block.len(),
                    });
                }
                blocks += 1;
                if block != &scene.bits()[user] {
                    block_errors += 1;
                }
            }
        }
        points.push(BlerPoint {
            ebn0_db,
            block_errors,
            blocks,
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_cfg() -> OfdmaConfig {
        OfdmaConfig::default_case()
    }

    fn random_bits(cfg: &OfdmaConfig, rng: &mut RngStream) -> Vec<Vec<u8>> {
        (0..cfg.users())
            .map(|_| (0..cfg.bits_per_user()).map(|_| rng.gen_range(0..=1u8)).collect())
            .collect()
    }

    #[test]
    fn modulate_roundtrips_through_demodulation() {
        let cfg = default_cfg();
        let mut rng = RngStream::new(41, 0);
        for _ in 0..20 {
            let bits = random_bits(&cfg, &mut rng);
            let signals = ofdma_modulate(&bits, &cfg).unwrap();
            let constellation = qam16();
            for user in 0..cfg.users() {
                let grid = fft(&signals[user][cfg.cp_len()..]).unwrap();
                let on_bins: Vec<Complex64> =
                    cfg.user_bins(user).iter().map(|&b| grid[b]).collect();
                assert_eq!(constellation.demap_nearest(&on_bins), bits[user]);
            }
        }
        // All-zero bits give a fixed deterministic waveform.
        let zeros = vec![vec![0u8; cfg.bits_per_user()]; cfg.users()];
        let a = ofdma_modulate(&zeros, &cfg).unwrap();
        let b = ofdma_modulate(&zeros, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn modulate_preserves_energy_and_cyclic_prefix() {
        let cfg = default_cfg();
        let mut rng = RngStream::new(42, 0);
        let bits = random_bits(&cfg, &mut rng);
        let signals = ofdma_modulate(&bits, &cfg).unwrap();
        let n = cfg.subcarriers();
        for (user, signal) in signals.iter().enumerate() {
            // Body energy equals subcarrier energy scaled by the 1/N of
            // the inverse transform.
            let body = &signal[cfg.cp_len()..];
            let time_energy: f64 = body.iter().map(|s| s.norm_sqr()).sum();
            let symbols = qam16().map_bits(&bits[user]);
            let freq_energy: f64 = symbols.iter().map(|s| s.norm_sqr()).sum();
            assert!((time_energy - freq_energy / n as f64).abs() <= 1e-9);
            // The prefix repeats the body's tail exactly.
            assert_eq!(&signal[..cfg.cp_len()], &body[n - cfg.cp_len()..]);
        }
    }

    #[test]
    fn users_occupy_disjoint_bins() {
        let cfg = default_cfg();
        let mut rng = RngStream::new(43, 0);
        let bits = random_bits(&cfg, &mut rng);
        let signals = ofdma_modulate(&bits, &cfg).unwrap();
        for user in 0..cfg.users() {
            let grid = fft(&signals[user][cfg.cp_len()..]).unwrap();
            let own = cfg.user_bins(user);
            for (bin, value) in grid.iter().enumerate() {
                if own.contains(&bin) {
                    assert!(value.norm() > 0.1, "own bin {bin} should carry a symbol");
                } else {
                    assert!(value.norm() <= 1e-12, "foreign bin {bin} must be empty");
                }
            }
        }
    }

    #[test]
    fn zero_cfo_time_simulation_matches_frequency_oracle() {
        // Master oracle: no offsets and cp >= taps-1 make the linear
        // channel act circularly, so the demodulated grid must equal the
        // per-bin product H_k[f] X_k[f] to near machine precision.
        let cfg = default_cfg();
        let mut rng = RngStream::new(44, 0);
        for _ in 0..20 {
            let scene = gen_scene_cfo_free(&cfg, f64::INFINITY, &mut rng);
            let grid = fft(&scene.received()[cfg.cp_len()..]).unwrap();
            for user in 0..cfg.users() {
                let response = scene.freq_response(user);
                for (i, &bin) in cfg.user_bins(user).iter().enumerate() {
                    let predicted = response[bin] * scene.symbols()[user][i];
                    assert!(
                        (grid[bin] - predicted).norm() <= 1e-9,
                        "bin {bin}: simulated {} vs predicted {}",
                        grid[bin],
                        predicted
                    );
                }
            }
        }
    }

    #[test]
    fn nonzero_cfo_leaks_energy_across_users() {
        let cfg = default_cfg();
        let mut rng = RngStream::new(45, 0);
        let bits = random_bits(&cfg, &mut rng);
        let signals = ofdma_modulate(&bits, &cfg).unwrap();
        // Only user 0 transmits, through an identity channel, with a
        // quarter-spacing offset and no noise.
        let mut lone = vec![vec![Complex64::new(0.0, 0.0); cfg.window_len()]; cfg.users()];
        lone[0] = signals[0].clone();
        let mut identity = vec![Complex64::new(0.0, 0.0); cfg.num_taps()];
        identity[0] = Complex64::new(1.0, 0.0);
        let channels = vec![identity; cfg.users()];
        let offset = |cfo: f64, rng: &mut RngStream| {
            let cfos = {
                let mut v = vec![0.0; cfg.users()];
                v[0] = cfo;
                v
            };
            compose_received(&cfg, &lone, &channels, &cfos, 0.0, rng).unwrap()
        };
        let shifted = offset(0.25, &mut rng);
        let grid = fft(&shifted.received()[cfg.cp_len()..]).unwrap();
        let foreign_energy: f64 = (0..cfg.subcarriers())
            .filter(|b| !cfg.user_bins(0).contains(b))
            .map(|b| grid[b].norm_sqr())
            .sum();
        let total_energy: f64 = grid.iter().map(|v| v.norm_sqr()).sum();
        assert!(
            foreign_energy > 1e-3 * total_energy,
            "expected inter-carrier leakage, got {foreign_energy:e} of {total_energy:e}"
        );
        // The aligned case keeps those bins empty.
        let aligned = offset(0.0, &mut rng);
        let grid0 = fft(&aligned.received()[cfg.cp_len()..]).unwrap();
        let foreign0: f64 = (0..cfg.subcarriers())
            .filter(|b| !cfg.user_bins(0).contains(b))
            .map(|b| grid0[b].norm_sqr())
            .sum();
        assert!(foreign0 <= 1e-12 * total_energy);
    }

    #[test]
    fn channel_power_normalization() {
        let cfg = default_cfg();
        let mut rng = RngStream::new(46, 0);
        let draws = 100_000;
        let mut total = 0.0;
        for _ in 0..draws {
            total += draw_channel(&cfg, &mut rng)
                .iter()
                .map(|h| h.norm_sqr())
                .sum::<f64>();
        }
        let mean = total / draws as f64;
        assert!((mean - 1.0).abs() <= 0.01, "mean channel power {mean}");
    }

    #[test]
    fn time_noise_variance_formula() {
        let cfg = default_cfg();
        assert_eq!(time_noise_var(&cfg, f64::INFINITY), 0.0);
        // 0 dB: N0 = 1/4 per bin, divided by 32 subcarriers.
        assert!((time_noise_var(&cfg, 0.0) - 0.25 / 32.0).abs() <= 1e-15);
        // 10 dB is a factor 10 down.
        assert!((time_noise_var(&cfg, 10.0) - 0.025 / 32.0).abs() <= 1e-15);
    }

    #[test]
    fn received_power_adds_user_powers_and_noise() {
        let cfg = default_cfg();
        let mut rng = RngStream::new(47, 0);
        let scenes = 2_000;
        let ebn0_db = 10.0;
        let mut composite = 0.0;
        let mut per_user_sum = 0.0;
        for _ in 0..scenes {
            let scene = gen_scene(&cfg, f64::INFINITY, &mut rng);
            composite += scene.received().iter().map(|s| s.norm_sqr()).sum::<f64>();
            // Independent single-user draws: silence everyone else.
            for user in 0..cfg.users() {
                let bits = random_bits(&cfg, &mut rng);
                let signals = ofdma_modulate(&bits, &cfg).unwrap();
                let mut lone = vec![vec![Complex64::new(0.0, 0.0); cfg.window_len()]; cfg.users()];
                lone[user] = signals[user].clone();
                let channels: Vec<Vec<Complex64>> =
                    (0..cfg.users()).map(|_| draw_channel(&cfg, &mut rng)).collect();
                let cfos: Vec<f64> = (0..cfg.users())
                    .map(|_| rng.gen_range(-cfg.cfo_max()..=cfg.cfo_max()))
                    .collect();
                let scene = compose_received(&cfg, &lone, &channels, &cfos, 0.0, &mut rng).unwrap();
                per_user_sum += scene.received().iter().map(|s| s.norm_sqr()).sum::<f64>();
            }
        }
        let composite_mean = composite / scenes as f64;
        let user_mean = per_user_sum / scenes as f64;
        assert!(
            (composite_mean - user_mean).abs() <= 0.05 * user_mean,
            "composite {composite_mean} vs summed users {user_mean}"
        );
        // Noise energy adds on top: expected n0 per sample over the window.
        let n0 = time_noise_var(&cfg, ebn0_db);
        let mut noisy = 0.0;
        for _ in 0..scenes {
            let scene = gen_scene(&cfg, ebn0_db, &mut rng);
            noisy += scene.received().iter().map(|s| s.norm_sqr()).sum::<f64>();
        }
        let noisy_mean = noisy / scenes as f64;
        let predicted = composite_mean + n0 * cfg.window_len() as f64;
        assert!(
            (noisy_mean - predicted).abs() <= 0.05 * predicted,
            "noisy {noisy_mean} vs predicted {predicted}"
        );
    }

    #[test]
    fn cfo_free_reference_recovers_noiseless_scenes() {
        let cfg = default_cfg();
        let mut rng = RngStream::new(48, 0);
        for _ in 0..50 {
            let scene = gen_scene_cfo_free(&cfg, f64::INFINITY, &mut rng);
            let decided = cfo_free_reference(&scene).unwrap();
            assert_eq!(decided, scene.bits());
        }
    }

    #[test]
    fn cfo_free_reference_rejects_offsets() {
        let cfg = default_cfg();
        let mut rng = RngStream::new(49, 0);
        let scene = gen_scene(&cfg, 10.0, &mut rng);
        assert!(scene.cfos().iter().any(|&e| e != 0.0));
        match cfo_free_reference(&scene) {
            Err(OfdmaError::NonzeroCfo(_)) => {}
            other => panic!("expected NonzeroCfo, got {other:?}"),
        }
    }

    #[test]
    fn cfo_free_bler_improves_with_snr() {
        let cfg = default_cfg();
        let mut rng = RngStream::new(50, 0);
        let points = bler_eval(
            cfo_free_reference,
            &cfg,
            &[10.0, 20.0],
            2_000,
            true,
            &mut rng,
        )
        .unwrap();
        assert!(
            points[1].block_errors < points[0].block_errors,
            "20 dB should err less than 10 dB: {points:?}"
        );
    }

    #[test]
    fn bler_eval_scores_perfect_and_random_detectors() {
        let cfg = default_cfg();
        let mut rng = RngStream::new(51, 0);
        let perfect =
            |scene: &OfdmaScene| -> Result<Vec<Vec<u8>>, OfdmaError> { Ok(scene.bits().to_vec()) };
        let points = bler_eval(perfect, &cfg, &[5.0], 200, false, &mut rng).unwrap();
        assert_eq!(points[0].block_errors, 0);
        assert_eq!(points[0].blocks, 200 * cfg.users() as u64);
        assert_eq!(points[0].bler(), 0.0);

        let mut guess_rng = RngStream::new(52, 7);
        let guess = move |scene: &OfdmaScene| -> Result<Vec<Vec<u8>>, OfdmaError> {
            Ok((0..scene.cfg().users())
                .map(|_| {
                    (0..scene.cfg().bits_per_user())
                        .map(|_| guess_rng.gen_range(0..=1u8))
                        .collect()
                })
                .collect())
        };
        let points = bler_eval(guess, &cfg, &[5.0], 200, false, &mut rng).unwrap();
        // 32 random bits match a block with probability 2^-32.
        assert!(points[0].bler() > 0.99);
    }

    #[test]
    fn bler_eval_is_reproducible() {
        let cfg = default_cfg();
        let run = || {
            let mut rng = RngStream::new(53, 3);
            bler_eval(cfo_free_reference, &cfg, &[8.0, 12.0], 300, true, &mut rng).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn scene_subrange_estimates_follow_true_cfos() {
        let cfg = default_cfg();
        let mut rng = RngStream::new(54, 0);
        let scene = gen_scene(&cfg, 10.0, &mut rng);
        let estimates = scene.subrange_center_estimates();
        for (est, &cfo) in estimates.iter().zip(scene.cfos()) {
            assert!((est - cfo).abs() <= cfg.subrange_width() / 2.0 + 1e-12);
            assert_eq!(cfg.subrange_index(*est), cfg.subrange_index(cfo));
        }
    }
}
