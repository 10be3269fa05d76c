//! Training orchestration: build module configs from key/value files,
//! train, save model files plus a per-epoch history CSV, and cache the
//! whole bundle keyed by a hash of the effective configuration.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::convdec::{train_segment_ann, ConvCodeSpec, SegmentAnnConfig, SegmentPlan};
use crate::mimodet::{
    train_cel, train_direct_l, train_dnn_pic, CelConfig, DirectLConfig, PicTrainConfig,
};
use crate::nnet::{save_model, TrainReport, TrainStatus, TrainingConfig};
use crate::ofdmasync::{train_branch_bank, BranchBankConfig, OfdmaConfig};

use super::config::{effective_seed, ConfigMap, HarnessError};
use super::sweep::fmt_db;

/// Which model bundle to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainTask {
    ConvdecAnn,
    Cel,
    DirectL,
    DnnPic,
    CatmudBank,
}

impl TrainTask {
    pub fn tag(self) -> &'static str {
        match self {
            TrainTask::ConvdecAnn => "convdec-ann",
            TrainTask::Cel => "cel",
            TrainTask::DirectL => "direct-l",
            TrainTask::DnnPic => "dnn-pic",
            TrainTask::CatmudBank => "catmud-bank",
        }
    }

    pub fn parse(name: &str) -> Result<Self, HarnessError> {
        use TrainTask::*;
        [ConvdecAnn, Cel, DirectL, DnnPic, CatmudBank]
            .into_iter()
            .find(|t| t.tag() == name)
            .ok_or(HarnessError::Unknown {
                what: "training task",
                name: name.to_string(),
            })
    }

    fn stem(self) -> &'static str {
        match self {
            TrainTask::ConvdecAnn => "convdec_ann",
            TrainTask::Cel => "cel",
            TrainTask::DirectL => "direct_l",
            TrainTask::DnnPic => "dnn_pic",
            TrainTask::CatmudBank => "catmud_bank",
        }
    }
}

/// What a training run produced (or found cached).
#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub model_files: Vec<PathBuf>,
    pub history_file: PathBuf,
    /// True when the hash marker matched and nothing was retrained.
    pub cached: bool,
    /// Wall-clock seconds the bundle took to train. On a cache hit this is
    /// read back from the original run, so time budgets stay meaningful.
    pub train_secs: f64,
}

/// 64-bit FNV-1a over the canonical config text — cheap, stable, and
/// collision-safe enough for a cache marker that only guards staleness.
fn content_hash(text: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in text.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn hash_marker_path(out_dir: &Path, task: TrainTask) -> PathBuf {
    out_dir.join(format!("{}.confighash", task.stem()))
}

fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    let mut file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    file.write_all(text.as_bytes())
        .map_err(|e| HarnessError::io(path, e))
}

fn ensure_completed(what: &str, report: &TrainReport) -> Result<(), HarnessError> {
    match report.status {
        TrainStatus::Completed => Ok(()),
        TrainStatus::Diverged { epoch, step } => Err(HarnessError::Diverged(format!(
            "{what}: non-finite loss at epoch {epoch}, step {step}"
        ))),
    }
}

/// One history CSV block: `model,epoch,loss,error_rate` rows, epochs
/// numbered from 1 in the order they ran.
fn history_rows(out: &mut String, model: &str, report: &TrainReport) {
    for (i, (loss, err)) in report
        .epoch_losses
        .iter()
        .zip(&report.epoch_error_rates)
        .enumerate()
    {
        out.push_str(&format!("{model},{},{loss},{err}\n", i + 1));
    }
}

/// Train (or reuse) the `task` bundle into `out_dir`.
///
/// The cache marker stores a hash of the effective configuration — the
/// merged key/value state including the seed override. When the marker
/// matches and every expected file exists, nothing is retrained; this is
/// what lets a case recipe rerun in seconds.
pub fn run_training(
    task: TrainTask,
    map: &ConfigMap,
    out_dir: &Path,
) -> Result<TrainingOutcome, HarnessError> {
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let seed = effective_seed(map.get_u64("seed", 1)?)?;
    let effective = format!("task = {}\nseed = {}\n{}", task.tag(), seed, map.canonical());
    let hash = content_hash(&effective);
    let marker = hash_marker_path(out_dir, task);
    let history_file = out_dir.join(format!("{}_history.csv", task.stem()));

    let expected = expected_files(task, map, out_dir)?;
    let secs_file = out_dir.join(format!("{}.trainsecs", task.stem()));
    let fresh_marker = std::fs::read_to_string(&marker)
        .ok()
        .map(|text| text.trim() == format!("{hash:016x}"))
        .unwrap_or(false);
    if fresh_marker && expected.iter().all(|p| p.exists()) && history_file.exists() {
        let train_secs = std::fs::read_to_string(&secs_file)
            .ok()
            .and_then(|t| t.trim().parse().ok())
            .unwrap_or(0.0);
        return Ok(TrainingOutcome {
            model_files: expected,
            history_file,
            cached: true,
            train_secs,
        });
    }

    let started = std::time::Instant::now();
    let mut history = String::from("model,epoch,loss,error_rate\n");
    match task {
        TrainTask::ConvdecAnn => {
            let cfg = convdec_ann_config(map, seed)?;
            let spec = ConvCodeSpec::default_rate_half();
            let plan = SegmentPlan::new(
                map.get_usize("segments", 4)?,
                map.get_usize("steps_per_segment", 8)?,
            )?;
            let (net, report) = train_segment_ann(&spec, &plan, &cfg)?;
            ensure_completed("segment_ann", &report)?;
            history_rows(&mut history, "segment_ann", &report);
            save_model(&net, &expected[0])?;
        }
        TrainTask::Cel => {
            let cfg = cel_config(map, seed)?;
            let (net, report) = train_cel(&cfg)?;
            ensure_completed("cel", &report)?;
            history_rows(&mut history, "cel", &report);
            save_model(&net, &expected[0])?;
        }
        TrainTask::DirectL => {
            let cfg = direct_l_config(map, seed)?;
            let (net, report) = train_direct_l(&cfg)?;
            ensure_completed("direct_l", &report)?;
            history_rows(&mut history, "direct_l", &report);
            save_model(&net, &expected[0])?;
        }
        TrainTask::DnnPic => {
            let cfg = dnn_pic_config(map, seed)?;
            let (stack, reports) = train_dnn_pic(&cfg)?;
            // One zero-prior stage plus the regeneration stages per point.
            let stages = 1 + cfg.regen_stages;
            for (pi, (point, net)) in stack.points.iter().enumerate() {
                let name = format!("dnn_pic_p{}", fmt_db(*point));
                for stage in 0..stages {
                    let report = &reports[pi * stages + stage];
                    ensure_completed(&name, report)?;
                    history_rows(&mut history, &name, report);
                }
                save_model(net, &out_dir.join(format!("{name}.phynn")))?;
            }
        }
        TrainTask::CatmudBank => {
            let cfg = catmud_bank_config(map, seed)?;
            let (bank, reports) = train_branch_bank(&cfg)?;
            let users = bank.cfg().users();
            let subranges = bank.cfg().subranges();
            for (k, net) in bank.classifiers().iter().enumerate() {
                let name = format!("classifier_u{k}");
                ensure_completed(&name, &reports[k])?;
                history_rows(&mut history, &name, &reports[k]);
                save_model(net, &out_dir.join(format!("{name}.phynn")))?;
            }
            for (k, row) in bank.branches().iter().enumerate() {
                for (q, net) in row.iter().enumerate() {
                    let name = format!("branch_u{k}_q{q}");
                    let report = &reports[users + k * subranges + q];
                    ensure_completed(&name, report)?;
                    history_rows(&mut history, &name, report);
                    save_model(net, &out_dir.join(format!("{name}.phynn")))?;
                }
            }
        }
    }

    let train_secs = started.elapsed().as_secs_f64();
    write_text(&history_file, &history)?;
    write_text(&secs_file, &format!("{train_secs:.3}\n"))?;
    // The marker is written last so an interrupted run never looks cached.
    write_text(&marker, &format!("{hash:016x}\n"))?;
    Ok(TrainingOutcome {
        model_files: expected,
        history_file,
        cached: false,
        train_secs,
    })
}

/// Model files a task is expected to produce, in a stable order.
fn expected_files(
    task: TrainTask,
    map: &ConfigMap,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    let names: Vec<String> = match task {
        TrainTask::ConvdecAnn => vec!["segment_ann".into()],
        TrainTask::Cel => vec!["cel".into()],
        TrainTask::DirectL => vec!["direct_l".into()],
        TrainTask::DnnPic => {
            let points = map.get_list("points", &[0.0, 5.0, 10.0])?;
            points
                .iter()
                .map(|&p| format!("dnn_pic_p{}", fmt_db(p)))
                .collect()
        }
        TrainTask::CatmudBank => {
            let users = map.get_usize("users", 4)?;
            let subranges = map.get_usize("subranges", 8)?;
            let mut names: Vec<String> =
                (0..users).map(|k| format!("classifier_u{k}")).collect();
            for k in 0..users {
                for q in 0..subranges {
                    names.push(format!("branch_u{k}_q{q}"));
                }
            }
            names
        }
    };
    Ok(names
        .into_iter()
        .map(|n| out_dir.join(format!("{n}.phynn")))
        .collect())
}

fn convdec_ann_config(map: &ConfigMap, seed: u64) -> Result<SegmentAnnConfig, HarnessError> {
    let mut cfg = SegmentAnnConfig::new(seed);
    cfg.hidden = map.get_list("hidden", &cfg.hidden)?;
    cfg.train_ebn0_db = map.get_f64("train_ebn0_db", cfg.train_ebn0_db)?;
    cfg.samples = map.get_usize("samples", cfg.samples)?;
    cfg.training = training_overrides(map, cfg.training)?;
    Ok(cfg)
}

fn cel_config(map: &ConfigMap, seed: u64) -> Result<CelConfig, HarnessError> {
    let mut cfg = CelConfig::new(seed);
    cfg.users = map.get_usize("users", cfg.users)?;
    cfg.rx_antennas = map.get_usize("rx_antennas", cfg.rx_antennas)?;
    cfg.hidden = map.get_list("hidden", &cfg.hidden)?;
    cfg.train_ebn0_db = map.get_f64("train_ebn0_db", cfg.train_ebn0_db)?;
    cfg.samples = map.get_usize("samples", cfg.samples)?;
    cfg.training = training_overrides(map, cfg.training)?;
    Ok(cfg)
}

fn direct_l_config(map: &ConfigMap, seed: u64) -> Result<DirectLConfig, HarnessError> {
    let mut cfg = DirectLConfig::new(seed);
    cfg.users = map.get_usize("users", cfg.users)?;
    cfg.rx_antennas = map.get_usize("rx_antennas", cfg.rx_antennas)?;
    cfg.hidden = map.get_list("hidden", &cfg.hidden)?;
    cfg.train_ebn0_db = map.get_f64("train_ebn0_db", cfg.train_ebn0_db)?;
    cfg.samples = map.get_usize("samples", cfg.samples)?;
    cfg.stage_learning_rates =
        map.get_list("stage_learning_rates", &cfg.stage_learning_rates)?;
    cfg.training = training_overrides(map, cfg.training)?;
    Ok(cfg)
}

fn dnn_pic_config(map: &ConfigMap, seed: u64) -> Result<PicTrainConfig, HarnessError> {
    let mut cfg = PicTrainConfig::new(seed);
    cfg.users = map.get_usize("users", cfg.users)?;
    cfg.rx_antennas = map.get_usize("rx_antennas", cfg.rx_antennas)?;
    cfg.layers = map.get_usize("layers", cfg.layers)?;
    cfg.points = map.get_list("points", &cfg.points)?;
    cfg.hidden = map.get_list("hidden", &cfg.hidden)?;
    cfg.samples = map.get_usize("samples", cfg.samples)?;
    cfg.regen_stages = map.get_usize("regen_stages", cfg.regen_stages)?;
    cfg.training = training_overrides(map, cfg.training)?;
    Ok(cfg)
}

fn catmud_bank_config(map: &ConfigMap, seed: u64) -> Result<BranchBankConfig, HarnessError> {
    let mut cfg = BranchBankConfig::new(seed);
    cfg.cfg = OfdmaConfig::new(
        map.get_usize("subcarriers", 32)?,
        map.get_usize("users", 4)?,
        map.get_usize("cp_len", 8)?,
        map.get_usize("taps", 8)?,
        map.get_f64("cfo_max", 0.4)?,
        map.get_usize("subranges", 8)?,
    )?;
    cfg.classifier_hidden = map.get_list("classifier_hidden", &cfg.classifier_hidden)?;
    cfg.branch_hidden = map.get_list("branch_hidden", &cfg.branch_hidden)?;
    cfg.train_points_db = map.get_list("train_points_db", &cfg.train_points_db)?;
    cfg.classifier_samples = map.get_usize("classifier_samples", cfg.classifier_samples)?;
    cfg.branch_samples = map.get_usize("branch_samples", cfg.branch_samples)?;
    cfg.classifier_training.learning_rate = map.get_f64(
        "classifier_learning_rate",
        cfg.classifier_training.learning_rate,
    )?;
    cfg.classifier_training.epochs =
        map.get_usize("classifier_epochs", cfg.classifier_training.epochs)?;
    cfg.branch_training.learning_rate =
        map.get_f64("branch_learning_rate", cfg.branch_training.learning_rate)?;
    cfg.branch_training.epochs = map.get_usize("branch_epochs", cfg.branch_training.epochs)?;
    let batch = map.get_usize("batch_size", cfg.branch_training.batch_size)?;
    cfg.classifier_training.batch_size = batch;
    cfg.branch_training.batch_size = batch;
    cfg.classifier_training.seed = seed;
    cfg.branch_training.seed = seed;
    cfg.seed = seed;
    Ok(cfg)
}

/// Apply the shared optimizer keys onto a task's default schedule.
fn training_overrides(
    map: &ConfigMap,
    mut tc: TrainingConfig,
) -> Result<TrainingConfig, HarnessError> {
    tc.learning_rate = map.get_f64("learning_rate", tc.learning_rate)?;
    tc.batch_size = map.get_usize("batch_size", tc.batch_size)?;
    tc.epochs = map.get_usize("epochs", tc.epochs)?;
    tc.seed = effective_seed(map.get_u64("seed", tc.seed)?)?;
    Ok(tc)
}
