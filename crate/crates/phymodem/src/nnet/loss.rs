use ndarray::{Array2, ArrayView2, Axis};

use super::network::{Activation, NnetError};

/// Training objective.
///
/// `Mse` averages squared error over output dims; the cross-entropy losses
/// are computed in log space fused with their output activation so that
/// saturated units still produce exact gradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    Mse,
    /// Per-output Bernoulli cross-entropy; requires a sigmoid output layer.
    BinaryCrossEntropy,
    /// One-distribution cross-entropy; requires a softmax output layer.
    CategoricalCrossEntropy,
}

impl Loss {
    /// Check that this loss may drive a network whose final activation is
    /// `final_act`.
    pub fn check_pairing(self, final_act: Activation) -> Result<(), NnetError> {
        let ok = match self {
            Loss::Mse => matches!(
                final_act,
                Activation::Relu | Activation::Sigmoid | Activation::Linear
            ),
            Loss::BinaryCrossEntropy => final_act == Activation::Sigmoid,
            Loss::CategoricalCrossEntropy => final_act == Activation::Softmax,
        };
        if ok {
            Ok(())
        } else {
            Err(NnetError::LossPairing {
                loss: self,
                activation: final_act,
            })
        }
    }
}

/// ln(1 + e^z) without overflow for large |z|.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// ln Σ e^z over one row, max-subtracted.
fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|z| (z - max).exp()).sum::<f64>().ln()
}

/// Batch-mean loss and its exact gradient with respect to the final layer's
/// *pre-activations*.
///
/// `final_z` are the pre-activations, `final_a` the activations of the last
/// layer, `targets` the training targets; all are `batch x out_dim`. The
/// returned delta already includes the 1/batch (and, where the loss averages
/// over outputs, 1/out_dim) factors.
pub(crate) fn loss_and_output_delta(
    loss: Loss,
    final_act: Activation,
    final_z: &Array2<f64>,
    final_a: &Array2<f64>,
    targets: ArrayView2<f64>,
) -> (f64, Array2<f64>) {
    let batch = final_a.nrows() as f64;
    let out_dim = final_a.ncols() as f64;
    match loss {
        Loss::Mse => {
            // L = mean over batch of mean over outputs of (a - t)^2.
            let diff = final_a - &targets;
            let loss_val = diff.iter().map(|d| d * d).sum::<f64>() / (batch * out_dim);
            let mut delta = diff;
            delta.mapv_inplace(|d| 2.0 * d / (batch * out_dim));
            // Chain through the output activation.
            match final_act {
                Activation::Linear => {}
                Activation::Relu => {
                    ndarray::Zip::from(&mut delta).and(final_z).for_each(|d, &z| {
                        if z <= 0.0 {
                            *d = 0.0;
                        }
                    });
                }
                Activation::Sigmoid => {
                    ndarray::Zip::from(&mut delta).and(final_a).for_each(|d, &a| {
                        *d *= a * (1.0 - a);
                    });
                }
                Activation::Softmax => unreachable!("pairing checked before use"),
            }
            (loss_val, delta)
        }
        Loss::BinaryCrossEntropy => {
            // Per output: softplus(z) - t·z, which equals
            // -[t·ln σ(z) + (1-t)·ln(1-σ(z))]; d/dz = σ(z) - t.
            let mut loss_val = 0.0;
            ndarray::Zip::from(final_z).and(&targets).for_each(|&z, &t| {
                loss_val += softplus(z) - t * z;
            });
            loss_val /= batch * out_dim;
            let mut delta = final_a - &targets;
            delta.mapv_inplace(|d| d / (batch * out_dim));
            (loss_val, delta)
        }
        Loss::CategoricalCrossEntropy => {
            // Per sample: logsumexp(z) - Σ t·z; d/dz = softmax(z) - t.
            let mut loss_val = 0.0;
            for (z_row, t_row) in final_z.axis_iter(Axis(0)).zip(targets.axis_iter(Axis(0))) {
                let lse = log_sum_exp(z_row.as_slice().expect("contiguous"));
                let dot: f64 = z_row.iter().zip(t_row.iter()).map(|(z, t)| z * t).sum();
                loss_val += lse - dot;
            }
            loss_val /= batch;
            let mut delta = final_a - &targets;
            delta.mapv_inplace(|d| d / batch);
            (loss_val, delta)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn pairing_rules_are_enforced() {
        assert!(Loss::Mse.check_pairing(Activation::Linear).is_ok());
        assert!(Loss::Mse.check_pairing(Activation::Relu).is_ok());
        assert!(Loss::Mse.check_pairing(Activation::Sigmoid).is_ok());
        assert!(Loss::Mse.check_pairing(Activation::Softmax).is_err());
        assert!(Loss::BinaryCrossEntropy
            .check_pairing(Activation::Sigmoid)
            .is_ok());
        assert!(Loss::BinaryCrossEntropy
            .check_pairing(Activation::Linear)
            .is_err());
        assert!(Loss::CategoricalCrossEntropy
            .check_pairing(Activation::Softmax)
            .is_ok());
        assert!(Loss::CategoricalCrossEntropy
            .check_pairing(Activation::Sigmoid)
            .is_err());
    }

    #[test]
    fn mse_matches_hand_computation() {
        let z = arr2(&[[0.5, -0.5]]);
        let a = z.clone(); // linear output
        let t = arr2(&[[1.0, 0.0]]);
        let (l, delta) = loss_and_output_delta(Loss::Mse, Activation::Linear, &z, &a, t.view());
        // ((0.5-1)^2 + (-0.5-0)^2) / 2 = 0.25
        assert!((l - 0.25).abs() <= 1e-15);
        assert!((delta[[0, 0]] - 2.0 * (-0.5) / 2.0).abs() <= 1e-15);
    }

    #[test]
    fn bce_is_finite_for_saturated_logits() {
        let z = arr2(&[[1000.0, -1000.0]]);
        let mut a = z.clone();
        super::super::network::activate_rows(&mut a, Activation::Sigmoid);
        let t = arr2(&[[0.0, 1.0]]); // exactly wrong, maximally saturated
        let (l, delta) =
            loss_and_output_delta(Loss::BinaryCrossEntropy, Activation::Sigmoid, &z, &a, t.view());
        assert!(l.is_finite() && l > 100.0, "loss {l}");
        assert!(delta.iter().all(|d| d.is_finite()));
    }

    #[test]
    fn cce_is_finite_for_saturated_logits() {
        let z = arr2(&[[1000.0, 0.0, -1000.0]]);
        let mut a = z.clone();
        super::super::network::activate_rows(&mut a, Activation::Softmax);
        let t = arr2(&[[0.0, 0.0, 1.0]]);
        let (l, delta) = loss_and_output_delta(
            Loss::CategoricalCrossEntropy,
            Activation::Softmax,
            &z,
            &a,
            t.view(),
        );
        assert!(l.is_finite() && l > 1000.0, "loss {l}");
        assert!(delta.iter().all(|d| d.is_finite()));
    }
}
