use ndarray::Array2;
use num_complex::Complex64;

use crate::nnet::{
    network_init, train, Activation, Dataset, LayerSpec, Loss, Network, NnetError, TrainReport,
    TrainingConfig,
};
use crate::sigproc::RngStream;

use super::learned::argmax;
use super::scene::{gen_scene, MimoError, MimoScene};

/// A layered cancellation detector: one small network, shared by every
/// user and reused at every layer, maps (interference-cancelled residual,
/// own channel column) to a soft symbol estimate. One module is kept per
/// training operating point; inference picks the nearest point.
#[derive(Debug, Clone)]
pub struct PicStack {
    /// Cancellation layers run at inference (>= 1).
    pub layers: usize,
    /// `(ebn0_db, module)` sorted ascending by operating point.
    pub points: Vec<(f64, Network)>,
}

impl PicStack {
    /// Module for an operating Eb/N0: nearest trained point, exact
    /// midpoints toward the lower point, infinite Eb/N0 to the highest.
    pub fn select(&self, ebn0_db: f64) -> &Network {
        assert!(!self.points.is_empty(), "stack holds no trained module");
        if !ebn0_db.is_finite() {
            return &self.points[self.points.len() - 1].1;
        }
        let mut best = 0;
        for (i, (point, _)) in self.points.iter().enumerate().skip(1) {
            if (ebn0_db - point).abs() < (ebn0_db - self.points[best].0).abs() {
                best = i;
            }
        }
        &self.points[best].1
    }
}

/// Hyperparameters for the cancellation-module training pipeline.
#[derive(Debug, Clone)]
pub struct PicTrainConfig {
    pub users: usize,
    pub rx_antennas: usize,
    /// Cancellation layers simulated during residual regeneration and at
    /// inference.
    pub layers: usize,
    /// Operating points; one module is trained per point.
    pub points: Vec<f64>,
    /// Hidden widths of the shared module (ReLU); softmax pair implied.
    pub hidden: Vec<usize>,
    /// Rows per training stage.
    pub samples: usize,
    /// Residual-regeneration rounds after the zero-prior stage. Each round
    /// re-simulates the cancellation pipeline with the current module and
    /// fine-tunes on the residuals it actually produces, at half the
    /// previous learning rate.
    pub regen_stages: usize,
    pub training: TrainingConfig,
}

impl PicTrainConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            users: 4,
            rx_antennas: 8,
            layers: 3,
            points: vec![0.0, 5.0, 10.0],
            hidden: vec![64, 32],
            samples: 240_000,
            regen_stages: 2,
            training: TrainingConfig::new(0.5, 64, 8, seed),
        }
    }
}

/// Module input: residual and own channel column as `[Re r; Im r; Re h_k;
/// Im h_k]`.
fn module_input(residual: &[Complex64], h_col: &[Complex64]) -> Vec<f64> {
    let mut input = Vec::with_capacity(4 * residual.len());
    input.extend(residual.iter().map(|v| v.re));
    input.extend(residual.iter().map(|v| v.im));
    input.extend(h_col.iter().map(|v| v.re));
    input.extend(h_col.iter().map(|v| v.im));
    input
}

/// Residual for user `k`: received vector minus every other user's channel
/// column scaled by its current (real) soft symbol estimate.
fn residual_for_user(scene: &MimoScene, soft: &[f64], k: usize) -> Vec<Complex64> {
    let nr = scene.rx_antennas();
    let mut r: Vec<Complex64> = scene.y.iter().copied().collect();
    for j in 0..scene.users() {
        if j == k {
            continue;
        }
        for i in 0..nr {
            r[i] -= scene.h[(i, j)] * soft[j];
        }
    }
    r
}

/// One cancellation pass with a given module: map the previous soft
/// estimates to the next ones (all users updated from the same priors).
/// Returns the per-user `[P(+1), P(-1)]` outputs alongside the inputs fed
/// to the module (the latter feed the regeneration datasets).
fn pic_layer(
    scene: &MimoScene,
    net: &Network,
    soft: &[f64],
) -> (Vec<[f64; 2]>, Vec<Vec<f64>>) {
    let users = scene.users();
    let mut probs = Vec::with_capacity(users);
    let mut inputs = Vec::with_capacity(users);
    for k in 0..users {
        let r = residual_for_user(scene, soft, k);
        let h_col: Vec<Complex64> = (0..scene.rx_antennas()).map(|i| scene.h[(i, k)]).collect();
        let input = module_input(&r, &h_col);
        let p = net.forward(&input);
        probs.push([p[0], p[1]]);
        inputs.push(input);
    }
    (probs, inputs)
}

/// Run the layered detector: soft estimates start at zero, every layer
/// re-estimates all users in parallel from the previous layer's soft
/// symbols (+1 probability minus -1 probability), and the final layer
/// hard-decides. The module is chosen by the scene's operating point.
pub fn dnn_pic_detect(scene: &MimoScene, stack: &PicStack) -> Result<Vec<u8>, MimoError> {
    assert!(stack.layers >= 1, "stack needs at least one layer");
    let net = stack.select(ebn0_from_n0(scene.n0));
    let expected = 4 * scene.rx_antennas();
    if net.input_dim() != expected || net.output_dim() != 2 {
        return Err(MimoError::DimMismatch {
            expected,
            got: net.input_dim(),
        });
    }
    let users = scene.users();
    let mut soft = vec![0.0; users];
    let mut probs = Vec::new();
    for _ in 0..stack.layers {
        let (p, _) = pic_layer(scene, net, &soft);
        soft = p.iter().map(|pk| pk[0] - pk[1]).collect();
        probs = p;
    }
    Ok(probs.iter().map(|p| argmax(p) as u8).collect())
}

/// Operating Eb/N0 implied by a scene's noise variance (inverse of the
/// scene generator's `n0 = 10^(-ebn0/10)` rule; `n0 = 0` is infinite).
fn ebn0_from_n0(n0: f64) -> f64 {
    if n0 == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * n0.log10()
    }
}

/// Dataset of zero-prior residuals (i.e. the raw received vector) at one
/// operating point: `scene_count * users` rows.
fn zero_prior_dataset(
    cfg: &PicTrainConfig,
    ebn0_db: f64,
    scene_count: usize,
    rng: &mut RngStream,
) -> Result<Dataset, NnetError> {
    let in_dim = 4 * cfg.rx_antennas;
    let rows = scene_count * cfg.users;
    let mut inputs = Array2::zeros((rows, in_dim));
    let mut targets = Array2::zeros((rows, 2));
    let soft = vec![0.0; cfg.users];
    let mut row = 0;
    for _ in 0..scene_count {
        let scene = gen_scene(cfg.users, cfg.rx_antennas, ebn0_db, rng);
        for k in 0..cfg.users {
            let r = residual_for_user(&scene, &soft, k);
            let h_col: Vec<Complex64> =
                (0..cfg.rx_antennas).map(|i| scene.h[(i, k)]).collect();
            for (j, v) in module_input(&r, &h_col).iter().enumerate() {
                inputs[(row, j)] = *v;
            }
            targets[(row, scene.bits[k] as usize)] = 1.0;
            row += 1;
        }
    }
    Dataset::new(inputs, targets)
}

/// Dataset of residuals the current module actually produces: simulate the
/// full cancellation pipeline and record every (layer, user) input with
/// the user's true bit as target: `scene_count * layers * users` rows.
fn regenerated_dataset(
    cfg: &PicTrainConfig,
    net: &Network,
    ebn0_db: f64,
    scene_count: usize,
    rng: &mut RngStream,
) -> Result<Dataset, NnetError> {
    let in_dim = 4 * cfg.rx_antennas;
    let rows = scene_count * cfg.layers * cfg.users;
    let mut inputs = Array2::zeros((rows, in_dim));
    let mut targets = Array2::zeros((rows, 2));
    let mut row = 0;
    for _ in 0..scene_count {
        let scene = gen_scene(cfg.users, cfg.rx_antennas, ebn0_db, rng);
        let mut soft = vec![0.0; cfg.users];
        for _ in 0..cfg.layers {
            let (probs, layer_inputs) = pic_layer(&scene, net, &soft);
            for (k, input) in layer_inputs.iter().enumerate() {
                for (j, v) in input.iter().enumerate() {
                    inputs[(row, j)] = *v;
                }
                targets[(row, scene.bits[k] as usize)] = 1.0;
                row += 1;
            }
            soft = probs.iter().map(|p| p[0] - p[1]).collect();
        }
    }
    Dataset::new(inputs, targets)
}

/// Train one module per operating point: first on zero-prior residuals,
/// then on progressively regenerated residuals from the module's own
/// cancellation pipeline (the learning rate halves per regeneration round).
pub fn train_dnn_pic(cfg: &PicTrainConfig) -> Result<(PicStack, Vec<TrainReport>), NnetError> {
    assert!(cfg.layers >= 1, "need at least one layer");
    assert!(!cfg.points.is_empty(), "need at least one operating point");
    let in_dim = 4 * cfg.rx_antennas;
    let mut specs = Vec::with_capacity(cfg.hidden.len() + 1);
    let mut dim = in_dim;
    for &width in &cfg.hidden {
        specs.push(LayerSpec::new(dim, width, Activation::Relu));
        dim = width;
    }
    specs.push(LayerSpec::new(dim, 2, Activation::Softmax));

    let mut points: Vec<(f64, Network)> = Vec::with_capacity(cfg.points.len());
    let mut reports = Vec::new();
    for (pi, &ebn0_db) in cfg.points.iter().enumerate() {
        // Distinct derived streams per point: 3 slots each for init, the
        // zero-prior stage, and the regeneration stages.
        let base = 10 + 10 * pi as u64;
        let mut net =
            network_init(&specs, &mut RngStream::new(cfg.training.seed, base))?;

        let scene_count = cfg.samples.div_ceil(cfg.users);
        let data = zero_prior_dataset(
            cfg,
            ebn0_db,
            scene_count,
            &mut RngStream::new(cfg.training.seed, base + 1),
        )?;
        let mut stage_cfg = cfg.training;
        reports.push(train(&mut net, &data, &stage_cfg, Loss::CategoricalCrossEntropy)?);

        for stage in 0..cfg.regen_stages {
            stage_cfg.learning_rate *= 0.5;
            let scene_count = cfg.samples.div_ceil(cfg.users * cfg.layers);
            let data = regenerated_dataset(
                cfg,
                &net,
                ebn0_db,
                scene_count,
                &mut RngStream::new(cfg.training.seed, base + 2 + stage as u64),
            )?;
            reports.push(train(&mut net, &data, &stage_cfg, Loss::CategoricalCrossEntropy)?);
        }
        points.push((ebn0_db, net));
    }
    points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok((
        PicStack {
            layers: cfg.layers,
            points,
        },
        reports,
    ))
}
