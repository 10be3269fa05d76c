use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, Normal};

use crate::sigproc::RngStream;

use super::Loss;

/// Elementwise (or, for softmax, rowwise) nonlinearity of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    /// Normalized exponential over the whole layer; final layer only.
    Softmax,
    Linear,
}

impl Activation {
    /// Stable id used by the model file format.
    pub fn id(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Sigmoid => 1,
            Activation::Softmax => 2,
            Activation::Linear => 3,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Sigmoid),
            2 => Some(Activation::Softmax),
            3 => Some(Activation::Linear),
            _ => None,
        }
    }
}

/// Shape and nonlinearity of one dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            activation,
        }
    }
}

/// Construction / training errors.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NnetError {
    #[error("network needs at least one layer")]
    EmptyNetwork,
    #[error("layer {0} has a zero dimension")]
    ZeroDimension(usize),
    #[error("layer {index} expects {expected} inputs but the previous layer emits {got}")]
    DimensionChain {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("softmax is only valid on the final layer (found on layer {0})")]
    SoftmaxPlacement(usize),
    #[error("{loss:?} cannot pair with a {activation:?} output layer")]
    LossPairing { loss: Loss, activation: Activation },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset rows disagree: {inputs} inputs vs {targets} targets")]
    RowMismatch { inputs: usize, targets: usize },
    #[error("dataset contains a non-finite value")]
    NonFiniteData,
    #[error("dataset shape {got} does not match network dimension {expected} ({side})")]
    DatasetDimension {
        side: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("batch size must be in 1..=dataset length (got {batch} for {len} samples)")]
    BadBatchSize { batch: usize, len: usize },
    #[error("training needs at least one epoch")]
    ZeroEpochs,
    #[error("learning rate must be finite and positive (got {0})")]
    BadLearningRate(f64),
}

#[derive(Debug, Clone)]
pub(crate) struct Layer {
    /// Row-major `out_dim x in_dim`.
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
    pub activation: Activation,
}

/// A dense feed-forward network.
#[derive(Debug, Clone)]
pub struct Network {
    pub(crate) layers: Vec<Layer>,
}

fn validate_specs(specs: &[LayerSpec]) -> Result<(), NnetError> {
    if specs.is_empty() {
        return Err(NnetError::EmptyNetwork);
    }
    for (i, spec) in specs.iter().enumerate() {
        if spec.in_dim == 0 || spec.out_dim == 0 {
            return Err(NnetError::ZeroDimension(i));
        }
        if spec.activation == Activation::Softmax && i + 1 != specs.len() {
            return Err(NnetError::SoftmaxPlacement(i));
        }
        if i > 0 && specs[i - 1].out_dim != spec.in_dim {
            return Err(NnetError::DimensionChain {
                index: i,
                expected: spec.in_dim,
                got: specs[i - 1].out_dim,
            });
        }
    }
    Ok(())
}

/// Initialize a network: weights drawn from N(0, 2/in_dim) per layer
/// (fan-in scaling keeps activation variance level through relu stacks),
/// biases zero. Deterministic for a given stream.
pub fn network_init(specs: &[LayerSpec], rng: &mut RngStream) -> Result<Network, NnetError> {
    validate_specs(specs)?;
    let layers = specs
        .iter()
        .map(|spec| {
            let std = (2.0 / spec.in_dim as f64).sqrt();
            let normal = Normal::new(0.0, std).expect("valid std dev");
            let weights = Array2::from_shape_fn((spec.out_dim, spec.in_dim), |_| {
                normal.sample(rng)
            });
            Layer {
                weights,
                biases: Array1::zeros(spec.out_dim),
                activation: spec.activation,
            }
        })
        .collect();
    Ok(Network { layers })
}

/// Numerically stable logistic function.
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Apply `activation` to each row of `z` in place.
pub(crate) fn activate_rows(z: &mut Array2<f64>, activation: Activation) {
    match activation {
        Activation::Linear => {}
        Activation::Relu => z.mapv_inplace(|v| if v > 0.0 { v } else { 0.0 }),
        Activation::Sigmoid => z.mapv_inplace(sigmoid),
        Activation::Softmax => {
            // Max-subtraction keeps the exponentials bounded, so rows sum to
            // one even for logits of magnitude 1e3.
            for mut row in z.axis_iter_mut(Axis(0)) {
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for v in row.iter_mut() {
                    *v = (*v - max).exp();
                    sum += *v;
                }
                for v in row.iter_mut() {
                    *v /= sum;
                }
            }
        }
    }
}

impl Network {
    /// Build a network from explicit parameters (used by the model loader).
    pub(crate) fn from_layers(layers: Vec<Layer>) -> Result<Self, NnetError> {
        let specs: Vec<LayerSpec> = layers
            .iter()
            .map(|l| LayerSpec::new(l.weights.ncols(), l.weights.nrows(), l.activation))
            .collect();
        validate_specs(&specs)?;
        for layer in &layers {
            let finite = layer.weights.iter().all(|v| v.is_finite())
                && layer.biases.iter().all(|v| v.is_finite());
            if !finite {
                return Err(NnetError::NonFiniteData);
            }
        }
        Ok(Network { layers })
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").weights.nrows()
    }

    /// Layer shapes and activations, in order.
    pub fn layer_specs(&self) -> Vec<LayerSpec> {
        self.layers
            .iter()
            .map(|l| LayerSpec::new(l.weights.ncols(), l.weights.nrows(), l.activation))
            .collect()
    }

    pub fn final_activation(&self) -> Activation {
        self.layers.last().expect("nonempty").activation
    }

    /// Evaluate one input vector.
    ///
    /// Panics if the input length differs from the first layer's `in_dim`.
    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        assert_eq!(
            input.len(),
            self.input_dim(),
            "input length {} does not match network input dimension {}",
            input.len(),
            self.input_dim()
        );
        let batch = ArrayView2::from_shape((1, input.len()), input).expect("shape");
        self.forward_batch(batch).row(0).to_vec()
    }

    /// Evaluate a batch (rows are samples).
    pub fn forward_batch(&self, input: ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(
            input.ncols(),
            self.input_dim(),
            "batch width {} does not match network input dimension {}",
            input.ncols(),
            self.input_dim()
        );
        let mut a = input.to_owned();
        for layer in &self.layers {
            let mut z = a.dot(&layer.weights.t());
            z += &layer.biases;
            activate_rows(&mut z, layer.activation);
            a = z;
        }
        a
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Read parameter `i` in the canonical order (per layer: weights
    /// row-major, then biases). Used by the gradient checker.
    pub fn param(&self, mut i: usize) -> f64 {
        for layer in &self.layers {
            if i < layer.weights.len() {
                return layer.weights.as_slice().expect("contiguous")[i];
            }
            i -= layer.weights.len();
            if i < layer.biases.len() {
                return layer.biases[i];
            }
            i -= layer.biases.len();
        }
        panic!("parameter index out of range");
    }

    /// Write parameter `i` in the canonical order.
    pub fn set_param(&mut self, mut i: usize, value: f64) {
        for layer in &mut self.layers {
            if i < layer.weights.len() {
                layer.weights.as_slice_mut().expect("contiguous")[i] = value;
                return;
            }
            i -= layer.weights.len();
            if i < layer.biases.len() {
                layer.biases[i] = value;
                return;
            }
            i -= layer.biases.len();
        }
        panic!("parameter index out of range");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(in_dim: usize, out_dim: usize, act: Activation) -> LayerSpec {
        LayerSpec::new(in_dim, out_dim, act)
    }

    #[test]
    fn init_rejects_bad_shapes() {
        let mut rng = RngStream::new(1, 0);
        assert_eq!(
            network_init(&[], &mut rng).unwrap_err(),
            NnetError::EmptyNetwork
        );
        assert_eq!(
            network_init(&[spec(0, 3, Activation::Relu)], &mut rng).unwrap_err(),
            NnetError::ZeroDimension(0)
        );
        assert_eq!(
            network_init(
                &[spec(4, 3, Activation::Relu), spec(2, 1, Activation::Sigmoid)],
                &mut rng
            )
            .unwrap_err(),
            NnetError::DimensionChain {
                index: 1,
                expected: 2,
                got: 3
            }
        );
        assert_eq!(
            network_init(
                &[spec(4, 3, Activation::Softmax), spec(3, 2, Activation::Softmax)],
                &mut rng
            )
            .unwrap_err(),
            NnetError::SoftmaxPlacement(0)
        );
    }

    #[test]
    fn init_uses_fan_in_scaled_weights_and_zero_biases() {
        let mut rng = RngStream::new(2, 0);
        let net = network_init(&[spec(100, 400, Activation::Relu)], &mut rng).unwrap();
        let w = &net.layers[0].weights;
        assert_eq!(w.shape(), &[400, 100]);
        let n = w.len() as f64;
        let mean = w.sum() / n;
        let var = w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        let expected = (2.0f64 / 100.0).sqrt(); // 0.1414...
        assert!(
            (std - expected).abs() <= 0.005,
            "sample std {std} vs expected {expected}"
        );
        assert!((mean).abs() <= 0.005);
        assert!(net.layers[0].biases.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn init_is_deterministic_per_stream() {
        let build = || {
            let mut rng = RngStream::new(3, 9);
            network_init(
                &[spec(8, 16, Activation::Relu), spec(16, 4, Activation::Sigmoid)],
                &mut rng,
            )
            .unwrap()
        };
        let a = build();
        let b = build();
        for (la, lb) in a.layers.iter().zip(&b.layers) {
            assert_eq!(la.weights, lb.weights);
            assert_eq!(la.biases, lb.biases);
        }
    }

    #[test]
    fn forward_applies_known_affine_map() {
        // 2 -> 2 linear layer with hand-set weights: y = Wx + b.
        let mut rng = RngStream::new(4, 0);
        let mut net = network_init(&[spec(2, 2, Activation::Linear)], &mut rng).unwrap();
        net.layers[0].weights = ndarray::arr2(&[[1.0, 2.0], [3.0, -4.0]]);
        net.layers[0].biases = ndarray::arr1(&[0.5, -0.5]);
        let y = net.forward(&[1.0, 1.0]);
        assert_eq!(y, vec![3.5, -1.5]);
    }

    #[test]
    fn relu_clamps_negative_preactivations() {
        let mut rng = RngStream::new(5, 0);
        let mut net = network_init(&[spec(1, 2, Activation::Relu)], &mut rng).unwrap();
        net.layers[0].weights = ndarray::arr2(&[[1.0], [-1.0]]);
        let y = net.forward(&[2.0]);
        assert_eq!(y, vec![2.0, 0.0]);
    }

    #[test]
    fn softmax_rows_sum_to_one_even_for_huge_logits() {
        let mut z = ndarray::arr2(&[[1000.0, -1000.0, 999.0], [-1000.0, -1000.0, -1000.0]]);
        activate_rows(&mut z, Activation::Softmax);
        for row in z.axis_iter(Axis(0)) {
            let sum: f64 = row.sum();
            assert!((sum - 1.0).abs() <= 1e-9, "row sum {sum}");
            assert!(row.iter().all(|v| v.is_finite() && *v >= 0.0));
        }
        // The dominant logit takes essentially all the mass.
        assert!(z[[0, 0]] > 0.7 && z[[0, 1]] < 1e-12);
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert!((sigmoid(0.0) - 0.5).abs() <= 1e-15);
    }

    #[test]
    fn param_roundtrip_covers_every_slot() {
        let mut rng = RngStream::new(6, 0);
        let mut net = network_init(
            &[spec(3, 4, Activation::Relu), spec(4, 2, Activation::Linear)],
            &mut rng,
        )
        .unwrap();
        let n = net.param_count();
        assert_eq!(n, 3 * 4 + 4 + 4 * 2 + 2);
        for i in 0..n {
            let v = net.param(i);
            net.set_param(i, v + 1.0);
            assert_eq!(net.param(i), v + 1.0);
            net.set_param(i, v);
        }
    }
}
