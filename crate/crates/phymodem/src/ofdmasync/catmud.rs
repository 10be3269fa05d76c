//! Classify-then-detect multiuser receiver: per-user CFO sub-range
//! classifiers route the raw window into per-(user, sub-range) detection
//! networks, optionally fusing each classified branch with its two
//! neighbors.
//!
//! Branch networks emit one sigmoid score per (symbol, constellation
//! label); scores renormalize per symbol into class probabilities at
//! detection time, which lets adjacent branches fuse by plain averaging.

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rand::Rng;

use super::config::{OfdmaConfig, OfdmaError};
use super::scene::{compose_received, ofdma_modulate, time_noise_var, OfdmaScene};
use crate::nnet::{
    network_init, train, Activation, Dataset, LayerSpec, Loss, Network, NnetError, TrainReport,
    TrainingConfig,
};
use crate::sigproc::RngStream;

/// Real-valued view of the received window: all real parts, then all
/// imaginary parts (dim `2 (N + cp_len)`).
pub(crate) fn classifier_input(scene: &OfdmaScene) -> Vec<f64> {
    let r = scene.received();
    let mut input = Vec::with_capacity(2 * r.len());
    input.extend(r.iter().map(|s| s.re));
    input.extend(r.iter().map(|s| s.im));
    input
}

/// All users' on-bin frequency responses, user-major with bins ascending
/// (dim `N` complex values).
fn csir_vector(scene: &OfdmaScene) -> Vec<Complex64> {
    let cfg = scene.cfg();
    let mut csir = Vec::with_capacity(cfg.subcarriers());
    for user in 0..cfg.users() {
        let response = scene.freq_response(user);
        csir.extend(cfg.user_bins(user).iter().map(|&bin| response[bin]));
    }
    csir
}

/// Detection-network input: the received window followed by the channel
/// state, each split into real then imaginary parts (dim `2(N+cp) + 2N`).
pub(crate) fn branch_input(scene: &OfdmaScene) -> Vec<f64> {
    let mut input = classifier_input(scene);
    let csir = csir_vector(scene);
    input.extend(csir.iter().map(|h| h.re));
    input.extend(csir.iter().map(|h| h.im));
    input
}

/// Supervised examples for one user's CFO sub-range classifier.
///
/// Every sample is an independent random scene at the given Eb/N0; the
/// input is the raw received window and the target one-hot encodes the
/// sub-range holding that user's CFO.
pub fn gen_classifier_dataset(
    cfg: &OfdmaConfig,
    user: usize,
    ebn0_db: f64,
    samples: usize,
    rng: &mut RngStream,
) -> Result<Dataset, NnetError> {
    assert!(user < cfg.users(), "user index out of range");
    let in_dim = 2 * cfg.window_len();
    let mut inputs = Array2::zeros((samples, in_dim));
    let mut targets = Array2::zeros((samples, cfg.subranges()));
    for row in 0..samples {
        let scene = super::scene::gen_scene(cfg, ebn0_db, rng);
        for (col, v) in classifier_input(&scene).into_iter().enumerate() {
            inputs[(row, col)] = v;
        }
        targets[(row, cfg.subrange_index(scene.cfos()[user]))] = 1.0;
    }
    Dataset::new(inputs, targets)
}

/// Supervised examples for the branch detecting `user` inside sub-range
/// `subrange`.
///
/// Scenes draw that user's CFO uniformly inside the sub-range and every
/// other user's CFO uniformly over the full range — the conditional
/// distribution the branch faces once the classifier has routed to it.
/// Targets concatenate one 16-way one-hot block per transmitted symbol.
pub fn gen_branch_dataset(
    cfg: &OfdmaConfig,
    user: usize,
    subrange: usize,
    ebn0_db: f64,
    samples: usize,
    rng: &mut RngStream,
) -> Result<Dataset, NnetError> {
    assert!(user < cfg.users(), "user index out of range");
    assert!(subrange < cfg.subranges(), "sub-range index out of range");
    let in_dim = 2 * cfg.window_len() + 2 * cfg.subcarriers();
    let out_dim = 16 * cfg.symbols_per_user();
    let lo = -cfg.cfo_max() + subrange as f64 * cfg.subrange_width();
    let hi = lo + cfg.subrange_width();
    let n0 = time_noise_var(cfg, ebn0_db);

    let mut inputs = Array2::zeros((samples, in_dim));
    let mut targets = Array2::zeros((samples, out_dim));
    for row in 0..samples {
        // Same draw order as plain scene generation: bits, channels,
        // CFOs (the conditioned user inside its cell), then noise.
        let bits: Vec<Vec<u8>> = (0..cfg.users())
            .map(|_| (0..cfg.bits_per_user()).map(|_| rng.gen_range(0..=1u8)).collect())
            .collect();
        let channels: Vec<Vec<Complex64>> =
            (0..cfg.users()).map(|_| super::scene::draw_channel(cfg, rng)).collect();
        let cfos: Vec<f64> = (0..cfg.users())
            .map(|k| {
                if k == user {
                    rng.gen_range(lo..hi)
                } else {
                    rng.gen_range(-cfg.cfo_max()..=cfg.cfo_max())
                }
            })
            .collect();
        let signals = ofdma_modulate(&bits, cfg).expect("generated bits match the allocation");
        let scene = compose_received(cfg, &signals, &channels, &cfos, n0, rng)
            .expect("generated dimensions are consistent");

        for (col, v) in branch_input(&scene).into_iter().enumerate() {
            inputs[(row, col)] = v;
        }
        for (sym, group) in scene.bits()[user].chunks_exact(4).enumerate() {
            let label = group.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
            targets[(row, 16 * sym + label)] = 1.0;
        }
    }
    Dataset::new(inputs, targets)
}

/// The trained classify-then-detect receiver: one classifier per user
/// and one detection network per (user, sub-range).
///
/// Construction validates totality and dimensions, so a bank value is
/// always fully trained and shape-consistent.
#[derive(Debug, Clone)]
pub struct BranchBank {
    cfg: OfdmaConfig,
    classifiers: Vec<Network>,
    branches: Vec<Vec<Network>>,
}

impl BranchBank {
    /// Assemble a bank from per-user classifiers and a full `users x
    /// subranges` grid of branch networks.
    pub fn from_parts(
        cfg: OfdmaConfig,
        classifiers: Vec<Network>,
        branches: Vec<Vec<Network>>,
    ) -> Result<Self, OfdmaError> {
        let (cin, cout) = Self::classifier_dims(&cfg);
        let (bin, bout) = Self::branch_dims(&cfg);
        if classifiers.len() != cfg.users() {
            return Err(OfdmaError::BankShape(format!(
                "{} classifiers for {} users",
                classifiers.len(),
                cfg.users()
            )));
        }
        for (user, net) in classifiers.iter().enumerate() {
            if net.input_dim() != cin || net.output_dim() != cout {
                return Err(OfdmaError::BankShape(format!(
                    "classifier {user} is {}x{}, expected {cin}x{cout}",
                    net.input_dim(),
                    net.output_dim()
                )));
            }
            if net.final_activation() != Activation::Softmax {
                return Err(OfdmaError::BankShape(format!(
                    "classifier {user} must end in softmax"
                )));
            }
        }
        if branches.len() != cfg.users() {
            return Err(OfdmaError::BankShape(format!(
                "{} branch rows for {} users",
                branches.len(),
                cfg.users()
            )));
        }
        for (user, row) in branches.iter().enumerate() {
            if row.len() != cfg.subranges() {
                return Err(OfdmaError::BankShape(format!(
                    "user {user} has {} branches for {} sub-ranges",
                    row.len(),
                    cfg.subranges()
                )));
            }
            for (q, net) in row.iter().enumerate() {
                if net.input_dim() != bin || net.output_dim() != bout {
                    return Err(OfdmaError::BankShape(format!(
                        "branch ({user},{q}) is {}x{}, expected {bin}x{bout}",
                        net.input_dim(),
                        net.output_dim()
                    )));
                }
                if net.final_activation() != Activation::Sigmoid {
                    return Err(OfdmaError::BankShape(format!(
                        "branch ({user},{q}) must end in sigmoid"
                    )));
                }
            }
        }
        Ok(Self {
            cfg,
            classifiers,
            branches,
        })
    }

    /// (input, output) dims of a classifier for this configuration.
    pub fn classifier_dims(cfg: &OfdmaConfig) -> (usize, usize) {
        (2 * cfg.window_len(), cfg.subranges())
    }

    /// (input, output) dims of a branch network for this configuration.
    pub fn branch_dims(cfg: &OfdmaConfig) -> (usize, usize) {
        (
            2 * cfg.window_len() + 2 * cfg.subcarriers(),
            16 * cfg.symbols_per_user(),
        )
    }

    pub fn cfg(&self) -> &OfdmaConfig {
        &self.cfg
    }

    pub fn classifiers(&self) -> &[Network] {
        &self.classifiers
    }

    pub fn branches(&self) -> &[Vec<Network>] {
        &self.branches
    }

    pub fn classifier(&self, user: usize) -> &Network {
        &self.classifiers[user]
    }

    pub fn branch(&self, user: usize, subrange: usize) -> &Network {
        &self.branches[user][subrange]
    }
}

/// Sizes, data volumes, and optimizer settings for training a bank.
#[derive(Debug, Clone)]
pub struct BranchBankConfig {
    pub cfg: OfdmaConfig,
    pub classifier_hidden: Vec<usize>,
    pub branch_hidden: Vec<usize>,
    /// Eb/N0 points training scenes are drawn at; the sample budget is
    /// split evenly across points (remainder to the last). Spreading the
    /// draw keeps the networks usable over the whole evaluated range
    /// instead of only near one operating point.
    pub train_points_db: Vec<f64>,
    pub classifier_samples: usize,
    pub branch_samples: usize,
    /// Template optimizer settings; each network's shuffle seed derives
    /// from `seed` plus its stream offset.
    pub classifier_training: TrainingConfig,
    pub branch_training: TrainingConfig,
    pub seed: u64,
}

impl BranchBankConfig {
    /// Defaults sized for the 4-user, 32-subcarrier case.
    ///
    /// The branch learning rate compensates the binary cross-entropy's
    /// averaging over its 128 outputs, which otherwise scales gradients
    /// down by the output count relative to the softmax classifier.
    pub fn new(seed: u64) -> Self {
        Self {
            cfg: OfdmaConfig::default_case(),
            classifier_hidden: vec![128, 64],
            branch_hidden: vec![192, 96],
            train_points_db: vec![8.0, 11.0, 14.0, 17.0, 20.0],
            classifier_samples: 100_000,
            branch_samples: 100_000,
            classifier_training: TrainingConfig::new(0.3, 64, 12, seed),
            branch_training: TrainingConfig::new(8.0, 64, 16, seed),
            seed,
        }
    }
}

/// Draw `total` rows split across the configured Eb/N0 points from one
/// stream, then stack the chunks into a single dataset.
fn stacked_dataset<F>(
    total: usize,
    points: &[f64],
    mut gen_at: F,
) -> Result<Dataset, NnetError>
where
    F: FnMut(f64, usize) -> Result<Dataset, NnetError>,
{
    assert!(!points.is_empty(), "need at least one training point");
    let share = total / points.len();
    let mut parts = Vec::with_capacity(points.len());
    for (i, &point) in points.iter().enumerate() {
        let n = if i + 1 == points.len() {
            total - share * (points.len() - 1)
        } else {
            share
        };
        if n > 0 {
            parts.push(gen_at(point, n)?);
        }
    }
    let inputs: Vec<_> = parts.iter().map(|d| d.inputs.view()).collect();
    let targets: Vec<_> = parts.iter().map(|d| d.targets.view()).collect();
    Dataset::new(
        ndarray::concatenate(Axis(0), &inputs).expect("equal widths"),
        ndarray::concatenate(Axis(0), &targets).expect("equal widths"),
    )
}

fn classifier_specs(cfg: &BranchBankConfig) -> Vec<LayerSpec> {
    let (input, output) = BranchBank::classifier_dims(&cfg.cfg);
    layer_chain(input, &cfg.classifier_hidden, output, Activation::Softmax)
}

fn branch_specs(cfg: &BranchBankConfig) -> Vec<LayerSpec> {
    let (input, output) = BranchBank::branch_dims(&cfg.cfg);
    layer_chain(input, &cfg.branch_hidden, output, Activation::Sigmoid)
}

fn layer_chain(input: usize, hidden: &[usize], output: usize, out_act: Activation) -> Vec<LayerSpec> {
    let mut specs = Vec::with_capacity(hidden.len() + 1);
    let mut prev = input;
    for &width in hidden {
        specs.push(LayerSpec::new(prev, width, Activation::Relu));
        prev = width;
    }
    specs.push(LayerSpec::new(prev, output, out_act));
    specs
}

/// Train every classifier and branch network of a bank from scratch.
///
/// Deterministic for a fixed config: classifier `k` uses init stream
/// `100 + k` and data stream `200 + k`; branch `(k, q)` uses init stream
/// `300 + k·Q + q` and data stream `400 + k·Q + q`; each network's
/// shuffle seed is the config seed plus its init stream offset. Reports
/// come back classifiers first, then branches row by row.
pub fn train_branch_bank(cfg: &BranchBankConfig) -> Result<(BranchBank, Vec<TrainReport>), NnetError> {
    let users = cfg.cfg.users();
    let subranges = cfg.cfg.subranges();
    let mut reports = Vec::with_capacity(users + users * subranges);

    let mut classifiers = Vec::with_capacity(users);
    for user in 0..users {
        let offset = 100 + user as u64;
        let mut net = network_init(
            &classifier_specs(cfg),
            &mut RngStream::new(cfg.seed, offset),
        )?;
        let mut data_rng = RngStream::new(cfg.seed, 100 + offset);
        let data = stacked_dataset(cfg.classifier_samples, &cfg.train_points_db, |point, n| {
            gen_classifier_dataset(&cfg.cfg, user, point, n, &mut data_rng)
        })?;
        let mut tc = cfg.classifier_training;
        tc.seed = cfg.seed.wrapping_add(offset);
        reports.push(train(&mut net, &data, &tc, Loss::CategoricalCrossEntropy)?);
        classifiers.push(net);
    }

    let mut branches = Vec::with_capacity(users);
    for user in 0..users {
        let mut row = Vec::with_capacity(subranges);
        for q in 0..subranges {
            let offset = 300 + (user * subranges + q) as u64;
            let mut net =
                network_init(&branch_specs(cfg), &mut RngStream::new(cfg.seed, offset))?;
            let mut data_rng = RngStream::new(cfg.seed, 100 + offset);
            let data = stacked_dataset(cfg.branch_samples, &cfg.train_points_db, |point, n| {
                gen_branch_dataset(&cfg.cfg, user, q, point, n, &mut data_rng)
            })?;
            let mut tc = cfg.branch_training;
            tc.seed = cfg.seed.wrapping_add(offset);
            reports.push(train(&mut net, &data, &tc, Loss::BinaryCrossEntropy)?);
            row.push(net);
        }
        branches.push(row);
    }

    let bank = BranchBank::from_parts(cfg.cfg.clone(), classifiers, branches)
        .expect("trained networks match the configured dimensions");
    Ok((bank, reports))
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        // Strict improvement keeps the lowest index on ties.
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Estimate each user's CFO sub-range with the trained classifiers.
pub fn cfo_classify(scene: &OfdmaScene, bank: &BranchBank) -> Result<Vec<usize>, OfdmaError> {
    if scene.cfg() != bank.cfg() {
        return Err(OfdmaError::BankShape(
            "bank was trained for a different configuration".into(),
        ));
    }
    let input = classifier_input(scene);
    Ok((0..scene.cfg().users())
        .map(|user| argmax(&bank.classifier(user).forward(&input)))
        .collect())
}

/// Branch indices activated for a classified sub-range: the index itself,
/// or with its two neighbors clipped to the valid range.
pub(crate) fn active_branches(q_hat: usize, subranges: usize, branches_on: usize) -> Vec<usize> {
    match branches_on {
        1 => vec![q_hat],
        3 => {
            let lo = q_hat.saturating_sub(1);
            let hi = (q_hat + 1).min(subranges - 1);
            (lo..=hi).collect()
        }
        _ => panic!("branches_on must be 1 or 3, got {branches_on}"),
    }
}

/// Detect every user's bits with the classify-then-detect receiver.
///
/// Per user: classify the sub-range, run the active branches, renormalize
/// each branch's sigmoid scores per symbol into class probabilities,
/// average across branches, and take the highest-probability label per
/// symbol (ties to the lower label).
pub fn cat_mud_detect(
    scene: &OfdmaScene,
    bank: &BranchBank,
    branches_on: usize,
) -> Result<Vec<Vec<u8>>, OfdmaError> {
    assert!(
        branches_on == 1 || branches_on == 3,
        "branches_on must be 1 or 3, got {branches_on}"
    );
    let classified = cfo_classify(scene, bank)?;
    let cfg = scene.cfg();
    let input = branch_input(scene);
    let symbols = cfg.symbols_per_user();

    let mut decided = Vec::with_capacity(cfg.users());
    for (user, &q_hat) in classified.iter().enumerate() {
        let active = active_branches(q_hat, cfg.subranges(), branches_on);
        let mut fused = vec![0.0; 16 * symbols];
        for &q in &active {
            let scores = bank.branch(user, q).forward(&input);
            for sym in 0..symbols {
                let group = &scores[16 * sym..16 * (sym + 1)];
                let total: f64 = group.iter().sum();
                for (label, &s) in group.iter().enumerate() {
                    // Fully saturated groups (all scores underflow to
                    // zero) fall back to a uniform vote.
                    let p = if total > 0.0 { s / total } else { 1.0 / 16.0 };
                    fused[16 * sym + label] += p;
                }
            }
        }
        let mut bits = Vec::with_capacity(4 * symbols);
        for sym in 0..symbols {
            let label = argmax(&fused[16 * sym..16 * (sym + 1)]);
            for shift in (0..4).rev() {
                bits.push(((label >> shift) & 1) as u8);
            }
        }
        decided.push(bits);
    }
    Ok(decided)
}
