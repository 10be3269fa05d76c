//! The acceptance gate: twelve numbered criteria, each producing one
//! pass/fail verdict with the measured numbers in its detail string.
//!
//! Criteria bound to a case recipe are evaluated from that recipe's sweep
//! tables, so `run_recipe` prints the same verdicts the acceptance run
//! reports. [`run_acceptance`] executes all three recipes, adds the
//! standalone numerics and determinism criteria, and returns the verdicts
//! ordered by criterion number. Failures are reported, never masked: a
//! missed target shows up as `passed: false` with the measured value.

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::convdec::{
    append_tail, bpsk_llr_channel, conv_encode, parallel_mld_decode, random_bits, viterbi_mld,
    ConvCodeSpec, SegmentPlan,
};
use crate::ofdmasync::OfdmaConfig;
use crate::sigproc::RngStream;

use super::config::HarnessError;
use super::recipe::{run_recipe, RecipeReport};
use super::stats::{crossing_db, rate_le_3sigma, RatePoint};
use super::sweep::{Detector, ResultRow, SweepTask};
use super::verify::{exhaustive_mld, run_verify, zero_cfo_max_deviation, VerifySuite};

/// Where the acceptance run keeps its recipes and reruns.
#[derive(Debug, Clone)]
pub struct AcceptContext {
    pub work_dir: PathBuf,
}

impl AcceptContext {
    pub fn new(work_dir: impl Into<PathBuf>) -> Self {
        AcceptContext {
            work_dir: work_dir.into(),
        }
    }
}

/// Verdict for one numbered criterion.
#[derive(Debug, Clone)]
pub struct CriterionResult {
    /// Criterion number, 1-12.
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    /// True when a quantitative target was missed but the mandatory
    /// ordering still holds and the measured gap is reported instead.
    pub flagged: bool,
    pub detail: String,
}

impl CriterionResult {
    fn new(id: usize, name: &'static str, passed: bool, detail: String) -> Self {
        CriterionResult {
            id,
            name,
            passed,
            flagged: false,
            detail,
        }
    }

    /// One-line report form: `criterion 3 PASS  name: detail`.
    pub fn line(&self) -> String {
        format!(
            "criterion {:2} {}  {}: {}{}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            if self.flagged {
                " [flagged: training-sensitive target]"
            } else {
                ""
            }
        )
    }
}

/// Run the full gate: all three recipes plus the standalone criteria.
pub fn run_acceptance(ctx: &AcceptContext) -> Result<Vec<CriterionResult>, HarnessError> {
    std::fs::create_dir_all(&ctx.work_dir).map_err(|e| HarnessError::io(&ctx.work_dir, e))?;
    let fig3 = run_recipe("fig3case", &ctx.work_dir.join("fig3case"))?;
    let fig9 = run_recipe("fig9case", &ctx.work_dir.join("fig9case"))?;
    let fig6 = run_recipe("fig6case", &ctx.work_dir.join("fig6case"))?;

    let mut out = Vec::new();
    out.extend(fig3.verdicts.iter().cloned());
    out.extend(fig9.verdicts.iter().cloned());
    out.extend(fig6.verdicts.iter().cloned());
    out.push(criterion_11_numerics());
    out.push(criterion_12_determinism(&fig3, &ctx.work_dir.join("fig3case_rerun"))?);
    out.sort_by_key(|c| c.id);
    Ok(out)
}

/// The criteria bound to one recipe's figure, evaluated from its tables.
pub fn criteria_for_recipe(report: &RecipeReport) -> Vec<CriterionResult> {
    match report.name.as_str() {
        "fig3case" => vec![
            criterion_1_parallel_equivalence(),
            criterion_2_viterbi_optimality(),
            criterion_3_segment_network(report),
            criterion_4_latency_report(report),
        ],
        "fig9case" => vec![
            criterion_5_classical_ordering(report),
            criterion_6_learned_hierarchy(report),
            criterion_7_equalize_then_learn_bound(report),
        ],
        "fig6case" => vec![
            criterion_8_subcarrier_oracle(),
            criterion_9_branch_bank_vs_cancellation(report),
            criterion_10_offset_free_proximity(report),
        ],
        _ => Vec::new(),
    }
}

// ------------------------------------------------------------- helpers

/// Bits per trial for the fixed geometries the criteria are defined on.
fn bits_per_trial(task: SweepTask) -> u64 {
    match task {
        SweepTask::Convdec => 30,
        SweepTask::Mimodet => 4,
        SweepTask::Ofdmasync => 128,
    }
}

fn blocks_per_trial(task: SweepTask) -> u64 {
    match task {
        SweepTask::Convdec | SweepTask::Mimodet => 1,
        SweepTask::Ofdmasync => 4,
    }
}

fn bit_point(row: &ResultRow) -> RatePoint {
    RatePoint::new(row.bit_errors, row.trials * bits_per_trial(row.task))
}

fn block_point(row: &ResultRow) -> RatePoint {
    RatePoint::new(row.block_errors, row.trials * blocks_per_trial(row.task))
}

/// (Eb/N0, BER) curve for one detector, in grid order.
fn ber_curve(report: &RecipeReport, table: &str, detector: Detector) -> Vec<(f64, f64)> {
    report
        .detector_rows(table, detector)
        .iter()
        .map(|r| (r.ebn0_db, r.ber))
        .collect()
}

fn bler_curve(report: &RecipeReport, table: &str, detector: Detector) -> Vec<(f64, f64)> {
    report
        .detector_rows(table, detector)
        .iter()
        .map(|r| (r.ebn0_db, r.bler))
        .collect()
}

/// `crossing_db`, except a curve already at or below the target on its
/// first point reports the grid edge as an upper bound on the crossing
/// (second tuple field true) instead of "no crossing".
fn crossing_or_edge(points: &[(f64, f64)], target: f64) -> Option<(f64, bool)> {
    if let Some(&(edge_db, edge_rate)) = points.first() {
        if edge_rate <= target {
            return Some((edge_db, true));
        }
    }
    crossing_db(points, target).map(|db| (db, false))
}

fn find_row<'a>(
    report: &'a RecipeReport,
    table: &str,
    detector: Detector,
    ebn0_db: f64,
) -> Option<&'a ResultRow> {
    report
        .detector_rows(table, detector)
        .into_iter()
        .find(|r| (r.ebn0_db - ebn0_db).abs() < 1e-9)
}

fn missing(id: usize, name: &'static str, what: &str) -> CriterionResult {
    CriterionResult::new(id, name, false, format!("missing sweep data: {what}"))
}

// ------------------------------------------------------------ criteria

/// 1: the split-and-merge decoder must be decision-identical to the
/// whole-block trellis on 10^4 codewords at each of 0, 2, 4 dB in <2 min.
fn criterion_1_parallel_equivalence() -> CriterionResult {
    let spec = ConvCodeSpec::default_rate_half();
    let plan = SegmentPlan::new(4, 8).expect("valid plan");
    let info_len = plan.total_steps() - spec.memory();
    let started = Instant::now();
    let mut mismatches = 0u64;
    let per_point = 10_000u64;
    for (pi, ebn0) in [0.0, 2.0, 4.0].into_iter().enumerate() {
        let mut rng = RngStream::new(41, pi as u64);
        for _ in 0..per_point {
            let coded = conv_encode(&spec, &append_tail(&random_bits(info_len, &mut rng), &spec));
            let soft = bpsk_llr_channel(&coded, ebn0, &mut rng);
            let whole = viterbi_mld(&spec, &soft).expect("valid soft length");
            let split = parallel_mld_decode(&spec, &plan, &soft).expect("valid soft length");
            if whole != split {
                mismatches += 1;
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    CriterionResult::new(
        1,
        "split decoder decision-identical to trellis",
        mismatches == 0 && secs < 120.0,
        format!("{mismatches} mismatches over 3x{per_point} codewords at 0/2/4 dB in {secs:.1} s (budget 120 s)"),
    )
}

/// 2: the trellis must equal exhaustive search over all 2^8 messages on
/// 500 noisy trials at 0 dB in <1 min.
fn criterion_2_viterbi_optimality() -> CriterionResult {
    let spec = ConvCodeSpec::default_rate_half();
    let info_len = 8;
    let started = Instant::now();
    let mut rng = RngStream::new(42, 0);
    let mut mismatches = 0u64;
    let trials = 500u64;
    for t in 0..trials {
        // Cycle the message through every 8-bit value so each block is
        // exercised; noise varies per trial.
        let word = (t % 256) as u8;
        let info: Vec<u8> = (0..info_len).map(|i| (word >> (7 - i)) & 1).collect();
        let coded = conv_encode(&spec, &append_tail(&info, &spec));
        let soft = bpsk_llr_channel(&coded, 0.0, &mut rng);
        if viterbi_mld(&spec, &soft).expect("valid soft length") != exhaustive_mld(&spec, &soft) {
            mismatches += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    CriterionResult::new(
        2,
        "trellis equals exhaustive message search",
        mismatches == 0 && secs < 60.0,
        format!("{mismatches} mismatches over {trials} trials at 0 dB in {secs:.1} s (budget 60 s)"),
    )
}

/// 3: the trained segment network's 4 dB BER must sit within 0.5
/// percentage points of the trellis, ≥200 error events each, with
/// training plus evaluation under 30 minutes.
fn criterion_3_segment_network(report: &RecipeReport) -> CriterionResult {
    let name = "segment network tracks trellis at 4 dB";
    let (Some(vit), Some(ann)) = (
        find_row(report, "decoder_4db", Detector::Viterbi, 4.0),
        find_row(report, "decoder_4db", Detector::Ann, 4.0),
    ) else {
        return missing(3, name, "decoder_4db rows");
    };
    let diff_pp = (ann.ber - vit.ber).abs() * 100.0;
    let events_ok = vit.block_errors >= 200 && ann.block_errors >= 200;
    let eval_secs = (vit.elapsed_ms + ann.elapsed_ms) as f64 / 1000.0;
    let total_secs = report.train_secs + eval_secs;
    let passed = diff_pp <= 0.5 && events_ok && total_secs < 1800.0;
    CriterionResult::new(
        3,
        name,
        passed,
        format!(
            "BER {:.3e} (network) vs {:.3e} (trellis), |diff| {diff_pp:.4} pp (limit 0.5); \
             events {}/{} (min 200 each); train+eval {total_secs:.0} s (budget 1800 s)",
            ann.ber, vit.ber, ann.block_errors, vit.block_errors
        ),
    )
}

/// 4: the operation report must carry analytic counts and measured
/// medians for both segment searchers — reported, never thresholded.
fn criterion_4_latency_report(report: &RecipeReport) -> CriterionResult {
    let name = "operation counts and latency medians reported";
    let path = report.out_dir.join("ops_report.txt");
    let Ok(text) = std::fs::read_to_string(&path) else {
        return missing(4, name, "ops_report.txt");
    };
    let mut fields = std::collections::BTreeMap::new();
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        if let Some((k, v)) = line.split_once(',') {
            fields.insert(k.to_string(), v.to_string());
        }
    }
    let wanted = [
        "mld_branch_evals",
        "ann_macs_per_start",
        "mld_median_ns",
        "ann_median_ns",
        "ann_to_mld_median_ratio",
    ];
    let have_all = wanted.iter().all(|k| fields.contains_key(*k));
    let summary: Vec<String> = wanted
        .iter()
        .filter_map(|k| fields.get(*k).map(|v| format!("{k}={v}")))
        .collect();
    CriterionResult::new(
        4,
        name,
        have_all,
        format!("{} (informational)", summary.join(", ")),
    )
}

/// 5: classical detector ordering MLD <= LMMSE <= ZF <= MF at every grid
/// point within 3 sigma, >=1e5 trials per point, under 10 minutes.
fn criterion_5_classical_ordering(report: &RecipeReport) -> CriterionResult {
    let name = "classical detector ordering holds";
    let chain = [Detector::Mld, Detector::Lmmse, Detector::Zf, Detector::Mf];
    let rows: Vec<Vec<&ResultRow>> = chain
        .iter()
        .map(|&d| report.detector_rows("classical_ber", d))
        .collect();
    if rows.iter().any(|r| r.is_empty()) {
        return missing(5, name, "classical_ber rows");
    }
    let points = rows[0].len();
    let mut violations = Vec::new();
    let mut min_trials = u64::MAX;
    let mut total_ms = 0u64;
    for p in 0..points {
        for w in 0..chain.len() - 1 {
            let (a, b) = (rows[w][p], rows[w + 1][p]);
            if !rate_le_3sigma(bit_point(a), bit_point(b)) {
                violations.push(format!(
                    "{} {:.3e} > {} {:.3e} at {} dB",
                    a.detector.tag(),
                    a.ber,
                    b.detector.tag(),
                    b.ber,
                    a.ebn0_db
                ));
            }
        }
    }
    for r in rows.iter().flatten() {
        min_trials = min_trials.min(r.trials);
        total_ms += r.elapsed_ms;
    }
    let secs = total_ms as f64 / 1000.0;
    let passed = violations.is_empty() && min_trials >= 100_000 && secs < 600.0;
    CriterionResult::new(
        5,
        name,
        passed,
        if violations.is_empty() {
            format!(
                "MLD <= LMMSE <= ZF <= MF (3 sigma) at all {points} points; \
                 min trials {min_trials}; sweeps took {secs:.0} s (budget 600 s)"
            )
        } else {
            format!("ordering violated: {}", violations.join("; "))
        },
    )
}

/// 6: the learned-detector hierarchy — the direct network strictly beats
/// every equalize-then-learn variant at 5 dB; the layered-cancellation
/// network's threshold gap to MLD at BER 1e-3 is at most 1 dB; the direct
/// network's threshold gain over the matched filter is at least 5 dB;
/// total training under one hour.
fn criterion_6_learned_hierarchy(report: &RecipeReport) -> CriterionResult {
    let name = "learned detector hierarchy";
    let cels = [Detector::CelMf, Detector::CelZf, Detector::CelLmmse];
    let Some(direct) = find_row(report, "five_db", Detector::DirectL, 5.0) else {
        return missing(6, name, "five_db direct-l row");
    };
    let mut notes = Vec::new();
    let mut strict_wins = true;
    for cel in cels {
        let Some(row) = find_row(report, "five_db", cel, 5.0) else {
            return missing(6, name, "five_db cel rows");
        };
        // A strict 3-sigma win: the variant's rate must exceed the direct
        // detector's by more than the combined uncertainty.
        let win = !rate_le_3sigma(bit_point(row), bit_point(direct));
        strict_wins &= win;
        notes.push(format!(
            "{} {:.3e} vs direct {:.3e}{}",
            cel.tag(),
            row.ber,
            direct.ber,
            if win { "" } else { " (NOT separated)" }
        ));
    }

    let mld_cross = crossing_db(&ber_curve(report, "learned_ber", Detector::Mld), 1e-3);
    let pic_cross = crossing_db(&ber_curve(report, "learned_ber", Detector::DnnPic), 1e-3);
    let gap_ok;
    match (mld_cross, pic_cross) {
        (Some(m), Some(p)) => {
            let gap = p - m;
            gap_ok = gap <= 1.0;
            notes.push(format!(
                "1e-3 thresholds: MLD {m:.2} dB, layered-cancellation {p:.2} dB, gap {gap:.2} dB (limit 1.0)"
            ));
        }
        _ => {
            gap_ok = false;
            notes.push("a 1e-3 threshold crossing was not reached on the scanned grid".into());
        }
    }

    let direct_cross = crossing_db(&ber_curve(report, "learned_ber", Detector::DirectL), 1e-3);
    let mf_rows = report.detector_rows("classical_ber", Detector::Mf);
    let mf_min = mf_rows.iter().map(|r| r.ber).fold(f64::INFINITY, f64::min);
    let mf_cross = crossing_db(&ber_curve(report, "classical_ber", Detector::Mf), 1e-3);
    let gain_ok = match (direct_cross, mf_cross) {
        (Some(d), Some(m)) => {
            let gain = m - d;
            notes.push(format!("direct gain over matched filter at 1e-3: {gain:.2} dB (min 5)"));
            gain > 5.0
        }
        (Some(d), None) => {
            notes.push(format!(
                "matched filter floors at {mf_min:.2e} and never reaches 1e-3 (direct crosses at {d:.2} dB): gain exceeds any finite target"
            ));
            true
        }
        (None, _) => {
            notes.push("direct detector never reached BER 1e-3 on the scanned grid".into());
            false
        }
    };

    // The trained stack must also respect the 5 dB chain
    // MLD <= layered-cancellation <= direct (3 sigma each): the layered
    // detector's whole point is improving on the direct network, so the
    // hierarchy gates this criterion alongside the threshold targets.
    let chain_ok = match (
        find_row(report, "five_db", Detector::Mld, 5.0),
        find_row(report, "five_db", Detector::DnnPic, 5.0),
    ) {
        (Some(mld), Some(pic)) => {
            let lower = rate_le_3sigma(bit_point(mld), bit_point(pic));
            let upper = rate_le_3sigma(bit_point(pic), bit_point(direct));
            notes.push(format!(
                "5 dB chain MLD {:.3e} <= layered {:.3e} <= direct {:.3e}: {}",
                mld.ber,
                pic.ber,
                direct.ber,
                lower && upper
            ));
            lower && upper
        }
        _ => {
            notes.push("five_db mld/layered rows missing".into());
            false
        }
    };

    let train_ok = report.train_secs < 3600.0;
    notes.push(format!(
        "training {:.0} s (budget 3600 s)",
        report.train_secs
    ));
    CriterionResult::new(
        6,
        name,
        strict_wins && gap_ok && gain_ok && chain_ok && train_ok,
        notes.join("; "),
    )
}

/// 7: no equalize-then-learn variant may beat MLD anywhere (3 sigma).
fn criterion_7_equalize_then_learn_bound(report: &RecipeReport) -> CriterionResult {
    let name = "equalize-then-learn variants stay above MLD";
    let mld = report.detector_rows("classical_ber", Detector::Mld);
    if mld.is_empty() {
        return missing(7, name, "classical_ber mld rows");
    }
    let mut violations = Vec::new();
    let mut points = 0;
    for cel in [Detector::CelMf, Detector::CelZf, Detector::CelLmmse] {
        let rows = report.detector_rows("cel_ber", cel);
        if rows.is_empty() {
            return missing(7, name, "cel_ber rows");
        }
        for row in rows {
            let Some(m) = mld.iter().find(|r| (r.ebn0_db - row.ebn0_db).abs() < 1e-9) else {
                continue;
            };
            points += 1;
            if !rate_le_3sigma(bit_point(m), bit_point(row)) {
                violations.push(format!(
                    "{} {:.3e} beats MLD {:.3e} at {} dB",
                    row.detector.tag(),
                    row.ber,
                    m.ber,
                    row.ebn0_db
                ));
            }
        }
    }
    CriterionResult::new(
        7,
        name,
        violations.is_empty(),
        if violations.is_empty() {
            format!("MLD lower-bounds all three variants at {points} (variant, SNR) cells (3 sigma)")
        } else {
            violations.join("; ")
        },
    )
}

/// 8: the zero-CFO time-domain simulation must match the per-subcarrier
/// frequency model within 1e-9 over 1e3 scenes in under 10 s.
fn criterion_8_subcarrier_oracle() -> CriterionResult {
    let started = Instant::now();
    let worst = zero_cfo_max_deviation(&OfdmaConfig::default_case(), 1_000, 3001);
    let secs = started.elapsed().as_secs_f64();
    CriterionResult::new(
        8,
        "zero-CFO simulation matches subcarrier model",
        worst <= 1e-9 && secs < 10.0,
        format!("max deviation {worst:.3e} over 1000 scenes (tolerance 1e-9) in {secs:.1} s (budget 10 s)"),
    )
}

/// 9: the 3-branch bank's threshold advantage over the cancellation
/// baseline at BLER 1e-1 should reach 1.5 dB, and fusing branches must
/// not hurt at 10 dB. A positive-but-short gap passes flagged, with the
/// measured value reported.
fn criterion_9_branch_bank_vs_cancellation(report: &RecipeReport) -> CriterionResult {
    let name = "branch bank beats cancellation baseline";
    let cm3_cross = crossing_or_edge(&bler_curve(report, "sync_bler", Detector::Catmud3), 1e-1);
    let pic_cross = crossing_or_edge(&bler_curve(report, "sync_bler", Detector::PicBaseline), 1e-1);
    let (Some(cm3_10), Some(cm1_10)) = (
        find_row(report, "sync_10db", Detector::Catmud3, 10.0),
        find_row(report, "sync_10db", Detector::Catmud1, 10.0),
    ) else {
        return missing(9, name, "sync_10db rows");
    };
    let fusion_ok = rate_le_3sigma(block_point(cm3_10), block_point(cm1_10));
    let fusion_note = format!(
        "10 dB BLER: 3-branch {:.4} <= 1-branch {:.4} (3 sigma): {}",
        cm3_10.bler, cm1_10.bler, fusion_ok
    );

    let Some((cm3, cm3_bound)) = cm3_cross else {
        return CriterionResult::new(
            9,
            name,
            false,
            format!("3-branch bank never reached BLER 1e-1 on the scanned grid; {fusion_note}"),
        );
    };
    let cm3_txt = if cm3_bound {
        format!("<= {cm3:.2} dB (below 1e-1 at the grid edge)")
    } else {
        format!("{cm3:.2} dB")
    };
    // cm3's edge bound only understates the gap (conservative); a
    // baseline edge bound would overstate it, so that case is flagged
    // below along with the baseline-never-crossing one.
    let mut unmeasurable = false;
    let (gap, gap_note) = match pic_cross {
        Some((pic, pic_bound)) => {
            unmeasurable = pic_bound;
            (
                pic - cm3,
                format!(
                    "1e-1 thresholds: 3-branch {cm3_txt}, baseline {pic:.2} dB, gap {:.2} dB (target 1.5)",
                    pic - cm3
                ),
            )
        }
        None => {
            unmeasurable = true;
            (
                f64::INFINITY,
                format!(
                    "baseline never reached BLER 1e-1 on the scanned grid (3-branch crosses at {cm3_txt}): advantage exceeds the grid span"
                ),
            )
        }
    };

    let mut result = if gap >= 1.5 && fusion_ok {
        CriterionResult::new(9, name, true, format!("{gap_note}; {fusion_note}"))
    } else if gap > 0.0 && fusion_ok {
        // Quantitative target missed but the mandatory ordering holds:
        // report the measured gap and flag the verdict training-sensitive.
        let mut r = CriterionResult::new(
            9,
            name,
            true,
            format!("{gap_note} — short of target but ordering holds; {fusion_note}"),
        );
        r.flagged = true;
        r
    } else {
        CriterionResult::new(9, name, false, format!("{gap_note}; {fusion_note}"))
    };
    // A degenerate pass without a measured baseline crossing is still
    // flagged so the verdict records the target was not measurable.
    if unmeasurable && result.passed {
        result.flagged = true;
    }
    result
}

/// 10: the 3-branch bank must stay within a factor of 3 of the
/// offset-free reference at 10 dB, reported with the measured ratio.
fn criterion_10_offset_free_proximity(report: &RecipeReport) -> CriterionResult {
    let name = "bank near the offset-free reference";
    let (Some(cm3), Some(free)) = (
        find_row(report, "sync_10db", Detector::Catmud3, 10.0),
        find_row(report, "sync_10db", Detector::CfoFree, 10.0),
    ) else {
        return missing(10, name, "sync_10db rows");
    };
    let ratio = if free.bler > 0.0 {
        cm3.bler / free.bler
    } else if cm3.bler == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    CriterionResult::new(
        10,
        name,
        ratio <= 3.0,
        format!(
            "10 dB BLER: 3-branch {:.4} vs offset-free {:.4}, ratio {ratio:.2} (limit 3)",
            cm3.bler, free.bler
        ),
    )
}

/// 11: gradient checks, softmax normalization, and FFT identities at
/// their pinned tolerances, in under a minute.
fn criterion_11_numerics() -> CriterionResult {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut count = 0;
    for suite in [VerifySuite::Gradcheck, VerifySuite::Invariants] {
        for check in run_verify(suite) {
            count += 1;
            if !check.passed {
                failures.push(format!("{}: {}", check.name, check.detail));
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    CriterionResult::new(
        11,
        "gradient and transform numerics",
        failures.is_empty() && secs < 60.0,
        if failures.is_empty() {
            format!("{count} checks passed in {secs:.1} s (budget 60 s)")
        } else {
            failures.join("; ")
        },
    )
}

/// 12: a recipe rerun with the same seed and shard count must reproduce
/// every CSV and model file byte-for-byte. The `elapsed_ms` CSV column is
/// wall-clock and excluded from the comparison, as is the latency report.
fn criterion_12_determinism(
    first: &RecipeReport,
    rerun_dir: &Path,
) -> Result<CriterionResult, HarnessError> {
    let name = "recipe rerun is byte-identical";
    let rerun = run_recipe(&first.name, rerun_dir)?;
    let mut compared = 0;
    let mut mismatches = Vec::new();
    for path in &first.artifacts {
        let rel = path
            .strip_prefix(&first.out_dir)
            .expect("artifacts live under the recipe dir");
        let twin = rerun.out_dir.join(rel);
        let file = rel.to_string_lossy();
        if file.ends_with("ops_report.txt") {
            continue; // wall-clock medians, legitimately different
        }
        let a = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
        let b = std::fs::read(&twin).map_err(|e| HarnessError::io(&twin, e))?;
        compared += 1;
        let equal = if file.ends_with(".csv") && !file.ends_with("_history.csv") {
            mask_elapsed(&a) == mask_elapsed(&b)
        } else {
            a == b
        };
        if !equal {
            mismatches.push(file.to_string());
        }
    }
    let _ = rerun;
    Ok(CriterionResult::new(
        12,
        name,
        mismatches.is_empty() && compared > 0,
        if mismatches.is_empty() {
            format!(
                "{compared} files identical across a fresh {} rerun (elapsed_ms column masked)",
                first.name
            )
        } else {
            format!("differing files: {}", mismatches.join(", "))
        },
    ))
}

/// Sweep CSV bytes with the trailing `elapsed_ms` field blanked per row.
fn mask_elapsed(bytes: &[u8]) -> Vec<String> {
    String::from_utf8_lossy(bytes)
        .lines()
        .map(|line| match line.rsplit_once(',') {
            Some((head, _)) => head.to_string(),
            None => line.to_string(),
        })
        .collect()
}
