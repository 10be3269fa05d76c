//! End-to-end case recipes: train every model a case study needs (with
//! caching), run its sweeps, and write all artifacts under one directory.
//!
//! Layout per recipe: `models/` holds the `.phynn` files, training
//! histories, and cache markers; the sweep CSVs and any report files sit
//! at the top level. Reruns into the same directory reuse cached models;
//! reruns into a fresh directory reproduce every CSV and model file
//! byte-for-byte (`elapsed_ms` excepted, being wall-clock).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::accept::{criteria_for_recipe, CriterionResult};
use super::config::{ConfigMap, HarnessError};
use super::ops::ops_report_text;
use super::sweep::{
    load_sweep_context, run_sweep, write_csv, Detector, ResultRow, SweepConfig,
};
use super::training::{run_training, TrainTask};

/// Names accepted by [`run_recipe`].
pub fn recipe_names() -> [&'static str; 3] {
    ["fig3case", "fig6case", "fig9case"]
}

/// Everything a recipe produced, with sweep rows kept in memory so
/// downstream checks don't have to re-parse the CSVs.
#[derive(Debug)]
pub struct RecipeReport {
    pub name: String,
    pub out_dir: PathBuf,
    /// Files written (or reused), models and CSVs included.
    pub artifacts: Vec<PathBuf>,
    /// Sweep rows keyed by CSV stem (e.g. `decoder_ber`).
    pub tables: BTreeMap<String, Vec<ResultRow>>,
    /// Total training wall time, read from cache markers when reused.
    pub train_secs: f64,
    /// True when every training bundle came from the cache.
    pub trainings_cached: bool,
    /// Human-readable result lines for the CLI.
    pub summary: Vec<String>,
    /// Verdicts for the acceptance criteria bound to this figure.
    pub verdicts: Vec<CriterionResult>,
}

impl RecipeReport {
    fn new(name: &str, out_dir: &Path) -> Self {
        RecipeReport {
            name: name.to_string(),
            out_dir: out_dir.to_path_buf(),
            artifacts: Vec::new(),
            tables: BTreeMap::new(),
            train_secs: 0.0,
            trainings_cached: true,
            summary: Vec::new(),
            verdicts: Vec::new(),
        }
    }

    /// Rows of one table for one detector, in grid order.
    pub fn detector_rows(&self, table: &str, detector: Detector) -> Vec<&ResultRow> {
        self.tables
            .get(table)
            .map(|rows| rows.iter().filter(|r| r.detector == detector).collect())
            .unwrap_or_default()
    }
}

/// Run one named recipe into `out_dir`, then evaluate and attach the
/// acceptance verdicts bound to its figure.
pub fn run_recipe(name: &str, out_dir: &Path) -> Result<RecipeReport, HarnessError> {
    let mut report = match name {
        "fig3case" => fig3case(out_dir),
        "fig6case" => fig6case(out_dir),
        "fig9case" => fig9case(out_dir),
        other => Err(HarnessError::Unknown {
            what: "recipe",
            name: other.to_string(),
        }),
    }?;
    report.verdicts = criteria_for_recipe(&report);
    for verdict in &report.verdicts {
        report.summary.push(verdict.line());
    }
    Ok(report)
}

/// One sweep's worth of settings inside a recipe.
struct SweepSpec {
    detector: Detector,
    start: f64,
    stop: f64,
    step: f64,
    trials: u64,
}

impl SweepSpec {
    fn new(detector: Detector, start: f64, stop: f64, step: f64, trials: u64) -> Self {
        SweepSpec {
            detector,
            start,
            stop,
            step,
            trials,
        }
    }
}

/// Fixed shard count for every recipe sweep. Shards select RNG streams,
/// so this is part of the result definition, not a tuning knob.
const RECIPE_SHARDS: u64 = 8;

/// Run a set of sweeps over shared link keys and write them as one CSV.
fn run_table(
    report: &mut RecipeReport,
    table: &str,
    specs: &[SweepSpec],
    link_keys: &[(&str, String)],
    model_dir: Option<&Path>,
) -> Result<(), HarnessError> {
    let mut rows = Vec::new();
    for spec in specs {
        let mut pairs: Vec<(String, String)> = vec![
            ("task".into(), spec.detector.task().tag().into()),
            ("detector".into(), spec.detector.tag().into()),
            ("ebn0_start".into(), spec.start.to_string()),
            ("ebn0_stop".into(), spec.stop.to_string()),
            ("ebn0_step".into(), spec.step.to_string()),
            ("trials".into(), spec.trials.to_string()),
            ("min_events".into(), "0".into()),
            ("shards".into(), RECIPE_SHARDS.to_string()),
        ];
        for (k, v) in link_keys {
            pairs.push(((*k).into(), v.clone()));
        }
        if let Some(dir) = model_dir {
            pairs.push(("model_dir".into(), dir.display().to_string()));
        }
        let map = ConfigMap::from_pairs(pairs);
        let cfg = SweepConfig::from_map(&map)?;
        let ctx = load_sweep_context(&map, cfg.detector)?;
        rows.extend(run_sweep(&cfg, &ctx)?);
    }
    let path = report.out_dir.join(format!("{table}.csv"));
    write_csv(&rows, &path)?;
    report.artifacts.push(path);
    report.tables.insert(table.to_string(), rows);
    Ok(())
}

/// Train one bundle into `models/`, folding its cost into the report.
fn train_into(
    report: &mut RecipeReport,
    task: TrainTask,
    overrides: &[(&str, String)],
) -> Result<PathBuf, HarnessError> {
    let models = report.out_dir.join("models");
    let map = ConfigMap::from_pairs(overrides.iter().map(|(k, v)| (*k, v.clone())));
    let outcome = run_training(task, &map, &models)?;
    report.train_secs += outcome.train_secs;
    report.trainings_cached &= outcome.cached;
    report.artifacts.extend(outcome.model_files);
    report.artifacts.push(outcome.history_file);
    report.summary.push(format!(
        "trained {} in {:.0} s{}",
        task.tag(),
        outcome.train_secs,
        if outcome.cached { " (cached)" } else { "" }
    ));
    Ok(models)
}

fn single_row<'a>(
    report: &'a RecipeReport,
    table: &str,
    detector: Detector,
    ebn0_db: f64,
) -> Option<&'a ResultRow> {
    report
        .tables
        .get(table)?
        .iter()
        .find(|r| r.detector == detector && (r.ebn0_db - ebn0_db).abs() < 1e-9)
}

// ----------------------------------------------------------- recipes

/// Decomposed convolutional decoding: equal-split segment decoders vs the
/// whole-block trellis, plus the trained per-segment network.
fn fig3case(out_dir: &Path) -> Result<RecipeReport, HarnessError> {
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let mut report = RecipeReport::new("fig3case", out_dir);
    let models = train_into(&mut report, TrainTask::ConvdecAnn, &[])?;

    let grid: Vec<SweepSpec> = [Detector::Viterbi, Detector::Parallel, Detector::Ann]
        .into_iter()
        .map(|d| SweepSpec::new(d, 0.0, 6.0, 1.0, 60_000))
        .collect();
    run_table(&mut report, "decoder_ber", &grid, &[], Some(&models))?;

    // A deeper look at the network's operating point, sized so both
    // decoders collect several hundred block-error events.
    let spotlight: Vec<SweepSpec> = [Detector::Viterbi, Detector::Ann]
        .into_iter()
        .map(|d| SweepSpec::new(d, 4.0, 4.0, 1.0, 150_000))
        .collect();
    run_table(&mut report, "decoder_4db", &spotlight, &[], Some(&models))?;

    let ops_path = out_dir.join("ops_report.txt");
    let ops = ops_report_text(&models.join("segment_ann.phynn"), 2_000, 1)?;
    std::fs::write(&ops_path, &ops).map_err(|e| HarnessError::io(&ops_path, e))?;
    report.artifacts.push(ops_path);

    if let (Some(vit), Some(ann)) = (
        single_row(&report, "decoder_4db", Detector::Viterbi, 4.0),
        single_row(&report, "decoder_4db", Detector::Ann, 4.0),
    ) {
        report.summary.push(format!(
            "4 dB BER: trellis {:.3e} vs segment network {:.3e} ({:+.4} pp)",
            vit.ber,
            ann.ber,
            (ann.ber - vit.ber) * 100.0
        ));
    }
    Ok(report)
}

/// Multiuser CFO synchronization: the classify-then-detect bank against
/// the cancellation baseline and the offset-free reference.
fn fig6case(out_dir: &Path) -> Result<RecipeReport, HarnessError> {
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let mut report = RecipeReport::new("fig6case", out_dir);
    let models = train_into(&mut report, TrainTask::CatmudBank, &[])?;

    let detectors = [
        Detector::Catmud1,
        Detector::Catmud3,
        Detector::PicBaseline,
        Detector::CfoFree,
    ];
    let grid: Vec<SweepSpec> = detectors
        .into_iter()
        .map(|d| SweepSpec::new(d, 2.0, 22.0, 2.0, 4_000))
        .collect();
    run_table(&mut report, "sync_bler", &grid, &[], Some(&models))?;

    // Dedicated high-count point where fusion and the offset-free gap are
    // compared statistically.
    let spotlight: Vec<SweepSpec> = detectors
        .into_iter()
        .map(|d| SweepSpec::new(d, 10.0, 10.0, 1.0, 10_000))
        .collect();
    run_table(&mut report, "sync_10db", &spotlight, &[], Some(&models))?;

    for d in detectors {
        if let Some(row) = single_row(&report, "sync_10db", d, 10.0) {
            report
                .summary
                .push(format!("10 dB BLER {}: {:.4}", d.tag(), row.bler));
        }
    }
    Ok(report)
}

/// Multiuser uplink detection: classical equalizers, equalize-then-learn
/// variants, the direct network detector, and layered cancellation.
fn fig9case(out_dir: &Path) -> Result<RecipeReport, HarnessError> {
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let mut report = RecipeReport::new("fig9case", out_dir);

    let models = train_into(&mut report, TrainTask::Cel, &[])?;
    // The direct detector ships with a wider stack and a longer
    // fresh-sample schedule than the module default: the joint 16-class
    // decision needs the extra capacity to pull clear of the best
    // equalize-then-learn variant.
    train_into(
        &mut report,
        TrainTask::DirectL,
        &[
            ("hidden", "512,256,128".to_string()),
            (
                "stage_learning_rates",
                "0.4,0.4,0.4,0.4,0.2,0.2,0.2,0.2,0.1,0.1,0.1,0.1,0.05,0.05,0.05,0.05,0.025,0.025,0.025,0.025"
                    .to_string(),
            ),
        ],
    )?;
    train_into(&mut report, TrainTask::DnnPic, &[])?;

    let classical: Vec<SweepSpec> =
        [Detector::Mld, Detector::Lmmse, Detector::Zf, Detector::Mf]
            .into_iter()
            .map(|d| SweepSpec::new(d, 0.0, 10.0, 2.0, 100_000))
            .collect();
    run_table(&mut report, "classical_ber", &classical, &[], None)?;

    let cel: Vec<SweepSpec> = [Detector::CelMf, Detector::CelZf, Detector::CelLmmse]
        .into_iter()
        .map(|d| SweepSpec::new(d, 0.0, 10.0, 2.0, 100_000))
        .collect();
    run_table(&mut report, "cel_ber", &cel, &[], Some(&models))?;

    // Fine grid through the waterfall region for threshold crossings.
    let learned: Vec<SweepSpec> = [Detector::Mld, Detector::DnnPic, Detector::DirectL]
        .into_iter()
        .map(|d| SweepSpec::new(d, -3.0, 5.0, 1.0, 60_000))
        .collect();
    run_table(&mut report, "learned_ber", &learned, &[], Some(&models))?;

    // High-count operating-point comparison; every detector sees the same
    // scenes, so the contrasts are paired. Two million scenes resolve the
    // gap between the direct detector and the best equalize-then-learn
    // variant, whose rates sit within a factor of two of each other.
    let five_db: Vec<SweepSpec> = [
        Detector::Mld,
        Detector::CelMf,
        Detector::CelZf,
        Detector::CelLmmse,
        Detector::DirectL,
        Detector::DnnPic,
    ]
    .into_iter()
    .map(|d| SweepSpec::new(d, 5.0, 5.0, 1.0, 2_000_000))
    .collect();
    run_table(&mut report, "five_db", &five_db, &[], Some(&models))?;

    for d in [
        Detector::Mld,
        Detector::CelLmmse,
        Detector::DirectL,
        Detector::DnnPic,
    ] {
        if let Some(row) = single_row(&report, "five_db", d, 5.0) {
            report
                .summary
                .push(format!("5 dB BER {}: {:.3e}", d.tag(), row.ber));
        }
    }
    Ok(report)
}
