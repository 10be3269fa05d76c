use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;

use crate::sigproc::RngStream;

use super::loss::loss_and_output_delta;
use super::network::{activate_rows, Activation, Network, NnetError};
use super::Loss;

/// A supervised training set: one row per sample.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub inputs: Array2<f64>,
    pub targets: Array2<f64>,
}

impl Dataset {
    /// Validate and wrap inputs/targets. Rejects empty sets, row-count
    /// mismatches, and non-finite values.
    pub fn new(inputs: Array2<f64>, targets: Array2<f64>) -> Result<Self, NnetError> {
        if inputs.nrows() == 0 {
            return Err(NnetError::EmptyDataset);
        }
        if inputs.nrows() != targets.nrows() {
            return Err(NnetError::RowMismatch {
                inputs: inputs.nrows(),
                targets: targets.nrows(),
            });
        }
        if !inputs.iter().all(|v| v.is_finite()) || !targets.iter().all(|v| v.is_finite()) {
            return Err(NnetError::NonFiniteData);
        }
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Hyperparameters for [`train`]: plain mini-batch SGD with a fixed
/// learning rate.
#[derive(Debug, Clone, Copy)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// The report's headline error rate averages over this many trailing
    /// epochs, which smooths the jitter of any single epoch.
    pub report_window: usize,
}

impl TrainingConfig {
    pub fn new(learning_rate: f64, batch_size: usize, epochs: usize, seed: u64) -> Self {
        Self {
            learning_rate,
            batch_size,
            epochs,
            seed,
            report_window: 10,
        }
    }
}

/// Per-layer parameter gradients, shaped like the network itself.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub d_weights: Vec<Array2<f64>>,
    pub d_biases: Vec<Array1<f64>>,
}

/// How a training run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainStatus {
    Completed,
    /// The loss became non-finite; training stopped at this (epoch, step).
    Diverged { epoch: usize, step: usize },
}

/// Summary of one [`train`] run.
#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Mean training loss per epoch (weighted by batch size).
    pub epoch_losses: Vec<f64>,
    /// Hard-decision training error rate per epoch: per-output thresholding
    /// at 0.5 for sigmoid/linear/relu outputs, argmax over classes for
    /// softmax.
    pub epoch_error_rates: Vec<f64>,
    /// Mean of `epoch_error_rates` over the trailing `report_window` epochs.
    pub window_error_rate: f64,
    pub status: TrainStatus,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        *self.epoch_losses.last().unwrap_or(&f64::NAN)
    }
}

/// Forward pass that keeps pre-activations and activations for backprop.
fn forward_trace(
    net: &Network,
    input: ArrayView2<f64>,
) -> (Vec<Array2<f64>>, Vec<Array2<f64>>) {
    let mut zs = Vec::with_capacity(net.layers.len());
    let mut activations = Vec::with_capacity(net.layers.len() + 1);
    activations.push(input.to_owned());
    for layer in &net.layers {
        let prev = activations.last().expect("nonempty");
        let mut z = prev.dot(&layer.weights.t());
        z += &layer.biases;
        let mut a = z.clone();
        activate_rows(&mut a, layer.activation);
        zs.push(z);
        activations.push(a);
    }
    (zs, activations)
}

/// Batch-mean loss and its exact parameter gradient.
///
/// Also returns the network outputs for the batch so callers can derive
/// decision metrics without a second forward pass.
fn loss_gradient_outputs(
    net: &Network,
    inputs: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    loss: Loss,
) -> Result<(f64, Gradients, Array2<f64>), NnetError> {
    loss.check_pairing(net.final_activation())?;
    if inputs.ncols() != net.input_dim() {
        return Err(NnetError::DatasetDimension {
            side: "inputs",
            expected: net.input_dim(),
            got: inputs.ncols(),
        });
    }
    if targets.ncols() != net.output_dim() {
        return Err(NnetError::DatasetDimension {
            side: "targets",
            expected: net.output_dim(),
            got: targets.ncols(),
        });
    }
    if inputs.nrows() == 0 {
        return Err(NnetError::EmptyDataset);
    }
    if inputs.nrows() != targets.nrows() {
        return Err(NnetError::RowMismatch {
            inputs: inputs.nrows(),
            targets: targets.nrows(),
        });
    }

    let (zs, activations) = forward_trace(net, inputs);
    let outputs = activations.last().expect("nonempty").clone();
    let n_layers = net.layers.len();

    let (loss_val, mut delta) = loss_and_output_delta(
        loss,
        net.final_activation(),
        &zs[n_layers - 1],
        &outputs,
        targets,
    );

    let mut d_weights = vec![Array2::zeros((0, 0)); n_layers];
    let mut d_biases = vec![Array1::zeros(0); n_layers];
    for l in (0..n_layers).rev() {
        // delta is dL/dZ_l (batch x out). Parameter gradients:
        d_weights[l] = delta.t().dot(&activations[l]);
        d_biases[l] = delta.sum_axis(Axis(0));
        if l > 0 {
            // Propagate to the previous layer's pre-activations.
            let mut d_act = delta.dot(&net.layers[l].weights);
            match net.layers[l - 1].activation {
                Activation::Linear => {}
                Activation::Relu => {
                    ndarray::Zip::from(&mut d_act).and(&zs[l - 1]).for_each(|d, &z| {
                        if z <= 0.0 {
                            *d = 0.0;
                        }
                    });
                }
                Activation::Sigmoid => {
                    ndarray::Zip::from(&mut d_act)
                        .and(&activations[l])
                        .for_each(|d, &a| {
                            *d *= a * (1.0 - a);
                        });
                }
                // Softmax cannot appear on a hidden layer (validated at
                // construction).
                Activation::Softmax => unreachable!("softmax on hidden layer"),
            }
            delta = d_act;
        }
    }

    Ok((
        loss_val,
        Gradients {
            d_weights,
            d_biases,
        },
        outputs,
    ))
}

/// Batch-mean loss and its exact gradient for `net` on one batch.
pub fn loss_and_gradient(
    net: &Network,
    inputs: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    loss: Loss,
) -> Result<(f64, Gradients), NnetError> {
    let (l, g, _) = loss_gradient_outputs(net, inputs, targets, loss)?;
    Ok((l, g))
}

/// Count hard-decision errors for one batch of outputs.
///
/// Returns (errors, decisions): per-output 0.5-threshold decisions for
/// elementwise activations, one argmax decision per row for softmax.
fn decision_errors(outputs: &Array2<f64>, targets: ArrayView2<f64>, softmax: bool) -> (u64, u64) {
    if softmax {
        let mut errors = 0;
        for (o_row, t_row) in outputs.axis_iter(Axis(0)).zip(targets.axis_iter(Axis(0))) {
            let pred = o_row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite"))
                .map(|(i, _)| i)
                .expect("nonempty row");
            let truth = t_row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite"))
                .map(|(i, _)| i)
                .expect("nonempty row");
            if pred != truth {
                errors += 1;
            }
        }
        (errors, outputs.nrows() as u64)
    } else {
        let mut errors = 0;
        ndarray::Zip::from(outputs).and(&targets).for_each(|&o, &t| {
            if (o > 0.5) != (t > 0.5) {
                errors += 1;
            }
        });
        (errors, outputs.len() as u64)
    }
}

/// Train `net` in place with plain mini-batch SGD.
///
/// Runs `epochs x ceil(n / batch_size)` descent steps; each epoch visits a
/// fresh random permutation of the dataset in `batch_size` chunks (the last
/// chunk may be short). Deterministic for a given config seed. A non-finite
/// loss stops training immediately and is flagged in the report status.
pub fn train(
    net: &mut Network,
    data: &Dataset,
    cfg: &TrainingConfig,
    loss: Loss,
) -> Result<TrainReport, NnetError> {
    loss.check_pairing(net.final_activation())?;
    if data.is_empty() {
        return Err(NnetError::EmptyDataset);
    }
    if cfg.batch_size == 0 || cfg.batch_size > data.len() {
        return Err(NnetError::BadBatchSize {
            batch: cfg.batch_size,
            len: data.len(),
        });
    }
    if cfg.epochs == 0 {
        return Err(NnetError::ZeroEpochs);
    }
    if !(cfg.learning_rate.is_finite() && cfg.learning_rate > 0.0) {
        return Err(NnetError::BadLearningRate(cfg.learning_rate));
    }
    if data.inputs.ncols() != net.input_dim() {
        return Err(NnetError::DatasetDimension {
            side: "inputs",
            expected: net.input_dim(),
            got: data.inputs.ncols(),
        });
    }
    if data.targets.ncols() != net.output_dim() {
        return Err(NnetError::DatasetDimension {
            side: "targets",
            expected: net.output_dim(),
            got: data.targets.ncols(),
        });
    }

    let softmax_out = net.final_activation() == Activation::Softmax;
    let mut rng = RngStream::new(cfg.seed, 0);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut epoch_error_rates = Vec::with_capacity(cfg.epochs);
    let mut status = TrainStatus::Completed;

    'epochs: for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut loss_weight = 0.0;
        let mut errors = 0u64;
        let mut decisions = 0u64;

        for (step, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch_inputs = data.inputs.select(Axis(0), chunk);
            let batch_targets = data.targets.select(Axis(0), chunk);
            let (batch_loss, grads, outputs) = loss_gradient_outputs(
                net,
                batch_inputs.view(),
                batch_targets.view(),
                loss,
            )?;
            if !batch_loss.is_finite() {
                status = TrainStatus::Diverged { epoch, step };
                epoch_losses.push(f64::NAN);
                epoch_error_rates.push(f64::NAN);
                break 'epochs;
            }
            let (e, d) = decision_errors(&outputs, batch_targets.view(), softmax_out);
            errors += e;
            decisions += d;
            loss_sum += batch_loss * chunk.len() as f64;
            loss_weight += chunk.len() as f64;

            for (layer, (dw, db)) in net
                .layers
                .iter_mut()
                .zip(grads.d_weights.iter().zip(grads.d_biases.iter()))
            {
                layer.weights.scaled_add(-cfg.learning_rate, dw);
                layer.biases.scaled_add(-cfg.learning_rate, db);
            }
        }

        epoch_losses.push(loss_sum / loss_weight);
        epoch_error_rates.push(errors as f64 / decisions as f64);
    }

    let window = cfg.report_window.clamp(1, epoch_error_rates.len());
    let tail = &epoch_error_rates[epoch_error_rates.len() - window..];
    let window_error_rate = tail.iter().sum::<f64>() / window as f64;

    Ok(TrainReport {
        epoch_losses,
        epoch_error_rates,
        window_error_rate,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    use super::super::network::{network_init, LayerSpec};

    fn xor_dataset() -> Dataset {
        Dataset::new(
            arr2(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]),
            arr2(&[[0.0], [1.0], [1.0], [0.0]]),
        )
        .unwrap()
    }

    #[test]
    fn dataset_validation_catches_bad_shapes() {
        assert_eq!(
            Dataset::new(Array2::zeros((0, 2)), Array2::zeros((0, 1))).unwrap_err(),
            NnetError::EmptyDataset
        );
        assert_eq!(
            Dataset::new(Array2::zeros((3, 2)), Array2::zeros((2, 1))).unwrap_err(),
            NnetError::RowMismatch {
                inputs: 3,
                targets: 2
            }
        );
        let mut bad = Array2::zeros((2, 2));
        bad[[0, 0]] = f64::NAN;
        assert_eq!(
            Dataset::new(bad, Array2::zeros((2, 1))).unwrap_err(),
            NnetError::NonFiniteData
        );
    }

    #[test]
    fn train_validates_hyperparameters() {
        let mut rng = RngStream::new(1, 0);
        let mut net = network_init(
            &[
                LayerSpec::new(2, 4, Activation::Sigmoid),
                LayerSpec::new(4, 1, Activation::Sigmoid),
            ],
            &mut rng,
        )
        .unwrap();
        let data = xor_dataset();
        let bad_batch = TrainingConfig::new(0.5, 5, 10, 0);
        assert!(matches!(
            train(&mut net, &data, &bad_batch, Loss::Mse),
            Err(NnetError::BadBatchSize { batch: 5, len: 4 })
        ));
        let zero_batch = TrainingConfig::new(0.5, 0, 10, 0);
        assert!(train(&mut net, &data, &zero_batch, Loss::Mse).is_err());
        let zero_epochs = TrainingConfig::new(0.5, 4, 0, 0);
        assert!(matches!(
            train(&mut net, &data, &zero_epochs, Loss::Mse),
            Err(NnetError::ZeroEpochs)
        ));
        let bad_lr = TrainingConfig::new(-1.0, 4, 10, 0);
        assert!(matches!(
            train(&mut net, &data, &bad_lr, Loss::Mse),
            Err(NnetError::BadLearningRate(_))
        ));
    }

    #[test]
    fn xor_trains_below_target_mse() {
        // The classic nonlinearly-separable sanity check: 2-8-1 sigmoid
        // network, full-batch SGD, learning rate 0.5, 5000 epochs.
        let mut rng = RngStream::new(2024, 0);
        let mut net = network_init(
            &[
                LayerSpec::new(2, 8, Activation::Sigmoid),
                LayerSpec::new(8, 1, Activation::Sigmoid),
            ],
            &mut rng,
        )
        .unwrap();
        let data = xor_dataset();
        let cfg = TrainingConfig::new(0.5, 4, 5000, 7);
        let report = train(&mut net, &data, &cfg, Loss::Mse).unwrap();
        assert_eq!(report.status, TrainStatus::Completed);
        assert!(
            report.final_loss() < 0.05,
            "final training mse {}",
            report.final_loss()
        );
        // The learned map must actually separate the four points.
        for (input, want) in [
            ([0.0, 0.0], 0.0),
            ([0.0, 1.0], 1.0),
            ([1.0, 0.0], 1.0),
            ([1.0, 1.0], 0.0),
        ] {
            let out = net.forward(&input)[0];
            assert!(
                (out > 0.5) == (want > 0.5),
                "xor({input:?}) = {out} want ~{want}"
            );
        }
    }

    #[test]
    fn training_is_deterministic_for_a_seed() {
        let run = || {
            let mut rng = RngStream::new(3, 1);
            let mut net = network_init(
                &[
                    LayerSpec::new(2, 6, Activation::Relu),
                    LayerSpec::new(6, 1, Activation::Sigmoid),
                ],
                &mut rng,
            )
            .unwrap();
            let cfg = TrainingConfig::new(0.2, 2, 50, 11);
            let report = train(&mut net, &xor_dataset(), &cfg, Loss::BinaryCrossEntropy).unwrap();
            (net, report)
        };
        let (net_a, rep_a) = run();
        let (net_b, rep_b) = run();
        for (la, lb) in net_a.layers.iter().zip(&net_b.layers) {
            assert_eq!(la.weights, lb.weights, "weights must match bit-for-bit");
            assert_eq!(la.biases, lb.biases);
        }
        assert_eq!(rep_a.epoch_losses, rep_b.epoch_losses);
    }

    #[test]
    fn step_count_is_epochs_times_ceil_batches() {
        // 5 samples, batch 2 -> 3 steps per epoch. One epoch of full-batch
        // descent on a linear net moves each weight once per step; verify
        // via loss trajectory length instead of instrumenting internals.
        let data = Dataset::new(
            Array2::from_shape_fn((5, 1), |(i, _)| i as f64 / 5.0),
            Array2::from_shape_fn((5, 1), |(i, _)| (i as f64) * 0.1),
        )
        .unwrap();
        let mut rng = RngStream::new(4, 0);
        let mut net = network_init(&[LayerSpec::new(1, 1, Activation::Linear)], &mut rng).unwrap();
        let cfg = TrainingConfig::new(0.05, 2, 7, 5);
        let report = train(&mut net, &data, &cfg, Loss::Mse).unwrap();
        assert_eq!(report.epoch_losses.len(), 7);
        assert_eq!(report.epoch_error_rates.len(), 7);
    }

    #[test]
    fn divergence_is_reported_not_hidden() {
        // An absurd learning rate on a linear regression explodes quickly.
        let data = Dataset::new(
            Array2::from_shape_fn((8, 1), |(i, _)| i as f64),
            Array2::from_shape_fn((8, 1), |(i, _)| 3.0 * i as f64),
        )
        .unwrap();
        let mut rng = RngStream::new(5, 0);
        let mut net = network_init(&[LayerSpec::new(1, 1, Activation::Linear)], &mut rng).unwrap();
        let cfg = TrainingConfig::new(1e12, 8, 50, 0);
        let report = train(&mut net, &data, &cfg, Loss::Mse).unwrap();
        assert!(matches!(report.status, TrainStatus::Diverged { .. }));
    }

    #[test]
    fn window_error_rate_averages_trailing_epochs() {
        let mut rng = RngStream::new(6, 0);
        let mut net = network_init(
            &[
                LayerSpec::new(2, 8, Activation::Sigmoid),
                LayerSpec::new(8, 1, Activation::Sigmoid),
            ],
            &mut rng,
        )
        .unwrap();
        let mut cfg = TrainingConfig::new(0.5, 4, 40, 7);
        cfg.report_window = 5;
        let report = train(&mut net, &xor_dataset(), &cfg, Loss::Mse).unwrap();
        let tail = &report.epoch_error_rates[35..];
        let expected = tail.iter().sum::<f64>() / 5.0;
        assert!((report.window_error_rate - expected).abs() <= 1e-15);
    }
}
