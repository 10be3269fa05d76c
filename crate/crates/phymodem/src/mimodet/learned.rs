use ndarray::Array2;

use crate::nnet::{
    network_init, train, Activation, Dataset, LayerSpec, Loss, Network, NnetError, TrainReport,
    TrainStatus, TrainingConfig,
};
use crate::sigproc::RngStream;

use super::classical::{bits_to_class, class_to_bits, equalize, CelEqualizer};
use super::scene::{gen_scene, MimoError, MimoScene};

/// What a generated supervised set teaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetMode {
    /// Per-user samples after zero-forcing equalization: input is one
    /// equalized scalar as `[Re, Im]`, target one-hot over the two symbols.
    Cel,
    /// Whole-scene samples: input is the received vector and the channel
    /// matrix laid out as `[Re y; Im y; Re vec(H); Im vec(H)]` (column
    /// major), target one-hot over all joint symbol vectors.
    Direct,
}

/// Flatten a scene into the direct-learning input layout.
pub(crate) fn direct_input(scene: &MimoScene) -> Vec<f64> {
    let nr = scene.rx_antennas();
    let k = scene.users();
    let mut input = Vec::with_capacity(2 * nr + 2 * nr * k);
    input.extend(scene.y.iter().map(|v| v.re));
    input.extend(scene.y.iter().map(|v| v.im));
    input.extend(scene.h.iter().map(|v| v.re));
    input.extend(scene.h.iter().map(|v| v.im));
    input
}

/// Index of the largest entry; exact ties break toward the lower index.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Draw a supervised training set at the given operating point.
///
/// `Direct` emits one row per scene. `Cel` cycles users within a scene
/// (a fresh scene every `users` rows) and skips the measure-zero event of
/// a numerically singular Gram matrix.
pub fn gen_mimo_dataset(
    mode: DatasetMode,
    users: usize,
    rx_antennas: usize,
    ebn0_db: f64,
    samples: usize,
    rng: &mut RngStream,
) -> Result<Dataset, NnetError> {
    assert!(samples >= 1, "need at least one sample");
    assert!(users <= 16, "joint class space limited to 16 users");
    match mode {
        DatasetMode::Direct => {
            let in_dim = 2 * rx_antennas + 2 * rx_antennas * users;
            let classes = 1usize << users;
            let mut inputs = Array2::zeros((samples, in_dim));
            let mut targets = Array2::zeros((samples, classes));
            for row in 0..samples {
                let scene = gen_scene(users, rx_antennas, ebn0_db, rng);
                for (j, v) in direct_input(&scene).iter().enumerate() {
                    inputs[(row, j)] = *v;
                }
                targets[(row, bits_to_class(&scene.bits))] = 1.0;
            }
            Dataset::new(inputs, targets)
        }
        DatasetMode::Cel => {
            let mut inputs = Array2::zeros((samples, 2));
            let mut targets = Array2::zeros((samples, 2));
            let mut row = 0;
            while row < samples {
                let scene = gen_scene(users, rx_antennas, ebn0_db, rng);
                let Ok(z) = equalize(&scene, CelEqualizer::Zf) else {
                    continue;
                };
                for user in 0..users.min(samples - row) {
                    inputs[(row, 0)] = z[user].re;
                    inputs[(row, 1)] = z[user].im;
                    targets[(row, scene.bits[user] as usize)] = 1.0;
                    row += 1;
                }
            }
            Dataset::new(inputs, targets)
        }
    }
}

/// Hyperparameters for the whole-scene joint classifier.
#[derive(Debug, Clone)]
pub struct DirectLConfig {
    pub users: usize,
    pub rx_antennas: usize,
    /// Hidden layer widths (ReLU); softmax output implied.
    pub hidden: Vec<usize>,
    pub train_ebn0_db: f64,
    /// Scenes drawn per stage (fresh every stage).
    pub samples: usize,
    /// One SGD run per entry; empty means a single run at `training` as-is.
    pub stage_learning_rates: Vec<f64>,
    /// Per-stage settings; `learning_rate` is overridden by the stage schedule.
    pub training: TrainingConfig,
}

impl DirectLConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            users: 4,
            rx_antennas: 8,
            hidden: vec![256, 128, 64],
            train_ebn0_db: 5.0,
            samples: 500_000,
            stage_learning_rates: vec![
                0.4, 0.4, 0.4, 0.4, 0.2, 0.2, 0.2, 0.2, 0.1, 0.1, 0.1, 0.1,
            ],
            training: TrainingConfig::new(0.4, 64, 2, seed),
        }
    }
}

/// Hyperparameters for the per-user equalized-scalar classifier.
#[derive(Debug, Clone)]
pub struct CelConfig {
    pub users: usize,
    pub rx_antennas: usize,
    pub hidden: Vec<usize>,
    pub train_ebn0_db: f64,
    pub samples: usize,
    pub training: TrainingConfig,
}

impl CelConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            users: 4,
            rx_antennas: 8,
            hidden: vec![16],
            train_ebn0_db: 5.0,
            samples: 100_000,
            training: TrainingConfig::new(0.5, 32, 6, seed),
        }
    }
}

fn classifier_specs(in_dim: usize, hidden: &[usize], classes: usize) -> Vec<LayerSpec> {
    let mut specs = Vec::with_capacity(hidden.len() + 1);
    let mut dim = in_dim;
    for &width in hidden {
        specs.push(LayerSpec::new(dim, width, Activation::Relu));
        dim = width;
    }
    specs.push(LayerSpec::new(dim, classes, Activation::Softmax));
    specs
}

/// Train the joint classifier on scenes at its configured operating point.
///
/// Weights draw from stream 1 of the config seed; stage `i` draws a fresh
/// dataset from stream `2 + i`. Fresh samples per stage keep the measured
/// training error an honest estimate of generalization — the class count is
/// small enough that a fixed dataset of this size gets memorized outright.
pub fn train_direct_l(cfg: &DirectLConfig) -> Result<(Network, TrainReport), NnetError> {
    let in_dim = 2 * cfg.rx_antennas + 2 * cfg.rx_antennas * cfg.users;
    let specs = classifier_specs(in_dim, &cfg.hidden, 1 << cfg.users);
    let mut net = network_init(&specs, &mut RngStream::new(cfg.training.seed, 1))?;
    let stage_lrs: Vec<f64> = if cfg.stage_learning_rates.is_empty() {
        vec![cfg.training.learning_rate]
    } else {
        cfg.stage_learning_rates.clone()
    };
    let mut merged: Option<TrainReport> = None;
    for (stage, &lr) in stage_lrs.iter().enumerate() {
        let data = gen_mimo_dataset(
            DatasetMode::Direct,
            cfg.users,
            cfg.rx_antennas,
            cfg.train_ebn0_db,
            cfg.samples,
            &mut RngStream::new(cfg.training.seed, 2 + stage as u64),
        )?;
        let mut tc = cfg.training.clone();
        tc.learning_rate = lr;
        tc.seed = cfg.training.seed.wrapping_add(stage as u64);
        let report = train(&mut net, &data, &tc, Loss::CategoricalCrossEntropy)?;
        merged = Some(match merged {
            None => report,
            Some(acc) => append_report(acc, report),
        });
        if let Some(ref r) = merged {
            if !matches!(r.status, TrainStatus::Completed) {
                break;
            }
        }
    }
    let mut report = merged.expect("at least one stage");
    let window = cfg.training.report_window.clamp(1, report.epoch_error_rates.len());
    let tail = &report.epoch_error_rates[report.epoch_error_rates.len() - window..];
    report.window_error_rate = tail.iter().sum::<f64>() / window as f64;
    Ok((net, report))
}

/// Concatenate two per-epoch histories; a divergence in either half wins.
fn append_report(mut acc: TrainReport, next: TrainReport) -> TrainReport {
    acc.epoch_losses.extend(next.epoch_losses);
    acc.epoch_error_rates.extend(next.epoch_error_rates);
    if matches!(acc.status, TrainStatus::Completed) {
        acc.status = next.status;
    }
    acc.window_error_rate = next.window_error_rate;
    acc
}

/// Train the shared two-class scalar classifier.
pub fn train_cel(cfg: &CelConfig) -> Result<(Network, TrainReport), NnetError> {
    let specs = classifier_specs(2, &cfg.hidden, 2);
    let mut net = network_init(&specs, &mut RngStream::new(cfg.training.seed, 1))?;
    let data = gen_mimo_dataset(
        DatasetMode::Cel,
        cfg.users,
        cfg.rx_antennas,
        cfg.train_ebn0_db,
        cfg.samples,
        &mut RngStream::new(cfg.training.seed, 2),
    )?;
    let report = train(&mut net, &data, &cfg.training, Loss::CategoricalCrossEntropy)?;
    Ok((net, report))
}

/// Joint detection: one forward pass, argmax over symbol-vector classes.
pub fn direct_l_detect(scene: &MimoScene, net: &Network) -> Result<Vec<u8>, MimoError> {
    let input = direct_input(scene);
    if net.input_dim() != input.len() {
        return Err(MimoError::DimMismatch {
            expected: net.input_dim(),
            got: input.len(),
        });
    }
    let classes = 1usize << scene.users();
    if net.output_dim() != classes {
        return Err(MimoError::DimMismatch {
            expected: net.output_dim(),
            got: classes,
        });
    }
    let probs = net.forward(&input);
    Ok(class_to_bits(argmax(&probs), scene.users()))
}

/// Equalize with the chosen front end, then classify each user's scalar.
pub fn cel_detect(
    scene: &MimoScene,
    net: &Network,
    eq: CelEqualizer,
) -> Result<Vec<u8>, MimoError> {
    if net.input_dim() != 2 || net.output_dim() != 2 {
        return Err(MimoError::DimMismatch {
            expected: 2,
            got: net.input_dim().max(net.output_dim()),
        });
    }
    let z = equalize(scene, eq)?;
    Ok(z.iter()
        .map(|v| argmax(&net.forward(&[v.re, v.im])) as u8)
        .collect())
}

#[cfg(test)]
mod tests {
    use crate::mimodet::classical::zf_detect;

    use super::*;

    #[test]
    fn direct_dataset_layout_and_uniform_classes() {
        let mut rng = RngStream::new(100, 0);
        let data =
            gen_mimo_dataset(DatasetMode::Direct, 4, 8, 5.0, 16_000, &mut rng).unwrap();
        assert_eq!(data.inputs.ncols(), 80);
        assert_eq!(data.targets.ncols(), 16);
        let mut histogram = [0usize; 16];
        for row in data.targets.rows() {
            let hot: Vec<usize> = (0..16).filter(|&c| row[c] == 1.0).collect();
            assert_eq!(hot.len(), 1);
            histogram[hot[0]] += 1;
        }
        // Uniform multinomial: mean 1000, sigma ~ sqrt(16000 * p(1-p)) ~ 30.6.
        for (c, &n) in histogram.iter().enumerate() {
            assert!(
                (n as f64 - 1000.0).abs() < 5.0 * 30.6,
                "class {c} count {n} too far from uniform"
            );
        }
    }

    #[test]
    fn cel_dataset_noiseless_scalars_sit_on_the_symbols() {
        let mut rng = RngStream::new(101, 0);
        let data =
            gen_mimo_dataset(DatasetMode::Cel, 4, 8, f64::INFINITY, 400, &mut rng).unwrap();
        assert_eq!(data.inputs.ncols(), 2);
        assert_eq!(data.targets.ncols(), 2);
        for row in 0..data.inputs.nrows() {
            let re = data.inputs[(row, 0)];
            let im = data.inputs[(row, 1)];
            let bit = if data.targets[(row, 1)] == 1.0 { 1 } else { 0 };
            let symbol = if bit == 0 { 1.0 } else { -1.0 };
            assert!((re - symbol).abs() < 1e-9, "row {row}: re {re} vs {symbol}");
            assert!(im.abs() < 1e-9);
        }
    }

    #[test]
    fn dataset_generation_is_reproducible() {
        let a = gen_mimo_dataset(DatasetMode::Direct, 4, 8, 5.0, 300, &mut RngStream::new(102, 0))
            .unwrap();
        let b = gen_mimo_dataset(DatasetMode::Direct, 4, 8, 5.0, 300, &mut RngStream::new(102, 0))
            .unwrap();
        assert_eq!(a.inputs, b.inputs);
        assert_eq!(a.targets, b.targets);
    }

    #[test]
    fn untrained_joint_classifier_sits_at_chance() {
        let specs = classifier_specs(80, &[64, 32], 16);
        let net = network_init(&specs, &mut RngStream::new(103, 5)).unwrap();
        let mut rng = RngStream::new(103, 0);
        let mut vector_errors = 0usize;
        let trials = 2000;
        for _ in 0..trials {
            let scene = gen_scene(4, 8, 5.0, &mut rng);
            let bits = direct_l_detect(&scene, &net).unwrap();
            if bits != scene.bits {
                vector_errors += 1;
            }
        }
        let rate = vector_errors as f64 / trials as f64;
        // Chance is 15/16 = 0.9375; an untrained net may be biased toward
        // one class, which can only move the rate modestly.
        assert!(rate > 0.80, "untrained vector error rate {rate}");
    }

    #[test]
    fn argmax_breaks_ties_low_and_ignores_logit_shifts() {
        assert_eq!(argmax(&[0.5, 0.5, 0.1]), 0);
        assert_eq!(argmax(&[0.1, 0.7, 0.7]), 1);
        let logits = [0.3, -1.2, 2.0, 0.9];
        let shifted: Vec<f64> = logits.iter().map(|v| v + 123.0).collect();
        assert_eq!(argmax(&logits), argmax(&shifted));
    }

    #[test]
    fn trained_scalar_classifier_recovers_the_sign_rule() {
        let mut cfg = CelConfig::new(11);
        cfg.samples = 60_000;
        cfg.training.epochs = 4;
        let (net, report) = train_cel(&cfg).unwrap();
        assert!(report.final_loss().is_finite());
        let mut rng = RngStream::new(104, 0);
        let mut agree = 0usize;
        let trials = 2000;
        for _ in 0..trials {
            let scene = gen_scene(4, 8, 5.0, &mut rng);
            let learned = cel_detect(&scene, &net, CelEqualizer::Zf).unwrap();
            if learned == zf_detect(&scene).unwrap() {
                agree += 1;
            }
        }
        let rate = agree as f64 / trials as f64;
        assert!(rate >= 0.99, "agreement with the sign rule: {rate}");
    }

    #[test]
    fn detector_rejects_mismatched_models() {
        let specs = classifier_specs(40, &[16], 16);
        let net = network_init(&specs, &mut RngStream::new(105, 0)).unwrap();
        let scene = gen_scene(4, 8, 5.0, &mut RngStream::new(105, 1));
        assert!(matches!(
            direct_l_detect(&scene, &net).unwrap_err(),
            MimoError::DimMismatch { .. }
        ));
        assert!(matches!(
            cel_detect(&scene, &net, CelEqualizer::Zf).unwrap_err(),
            MimoError::DimMismatch { .. }
        ));
    }
}
