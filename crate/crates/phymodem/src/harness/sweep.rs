//! Deterministic sharded BER/BLER sweeps over the three link setups.
//!
//! One sweep measures one (task, detector) pair over an Eb/N0 grid. Per
//! point, shard `s` draws every scene from `RngStream(seed, s)` and all
//! shards advance in synchronized rounds; after each round the summed
//! block-error count decides whether the point stops early. Counts are
//! integers throughout — rates are divisions performed once at the end.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::convdec::{
    ann_parallel_decode, append_tail, bpsk_llr_channel, conv_encode, parallel_mld_decode,
    random_bits, viterbi_mld, ConvCodeSpec, SegmentPlan,
};
use crate::mimodet::{
    cel_detect, direct_l_detect, dnn_pic_detect, gen_scene as gen_mimo_scene, lmmse_detect,
    mf_detect, mld_detect, zf_detect, CelEqualizer, PicStack,
};
use crate::nnet::{load_model, Network};
use crate::ofdmasync::{
    cat_mud_detect, cfo_free_reference, gen_scene as gen_ofdma_scene, gen_scene_cfo_free,
    pic_baseline_detect, BranchBank, OfdmaConfig,
};
use crate::sigproc::RngStream;

use super::config::{ConfigMap, HarnessError};

/// Which link setup a sweep exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepTask {
    Convdec,
    Mimodet,
    Ofdmasync,
}

impl SweepTask {
    pub fn tag(self) -> &'static str {
        match self {
            SweepTask::Convdec => "convdec",
            SweepTask::Mimodet => "mimodet",
            SweepTask::Ofdmasync => "ofdmasync",
        }
    }

    pub fn parse(name: &str) -> Result<Self, HarnessError> {
        match name {
            "convdec" => Ok(SweepTask::Convdec),
            "mimodet" => Ok(SweepTask::Mimodet),
            "ofdmasync" => Ok(SweepTask::Ofdmasync),
            _ => Err(HarnessError::Unknown {
                what: "task",
                name: name.to_string(),
            }),
        }
    }
}

impl fmt::Display for SweepTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Tagged detector under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detector {
    // convdec
    Viterbi,
    Parallel,
    Ann,
    // mimodet
    Mf,
    Zf,
    Lmmse,
    Mld,
    CelMf,
    CelZf,
    CelLmmse,
    DirectL,
    DnnPic,
    // ofdmasync
    Catmud1,
    Catmud3,
    PicBaseline,
    CfoFree,
}

impl Detector {
    pub fn tag(self) -> &'static str {
        match self {
            Detector::Viterbi => "viterbi",
            Detector::Parallel => "parallel",
            Detector::Ann => "ann",
            Detector::Mf => "mf",
            Detector::Zf => "zf",
            Detector::Lmmse => "lmmse",
            Detector::Mld => "mld",
            Detector::CelMf => "cel-mf",
            Detector::CelZf => "cel-zf",
            Detector::CelLmmse => "cel-lmmse",
            Detector::DirectL => "direct-l",
            Detector::DnnPic => "dnn-pic",
            Detector::Catmud1 => "catmud-1",
            Detector::Catmud3 => "catmud-3",
            Detector::PicBaseline => "pic",
            Detector::CfoFree => "cfo-free",
        }
    }

    pub fn parse(name: &str) -> Result<Self, HarnessError> {
        use Detector::*;
        let all = [
            Viterbi, Parallel, Ann, Mf, Zf, Lmmse, Mld, CelMf, CelZf, CelLmmse, DirectL, DnnPic,
            Catmud1, Catmud3, PicBaseline, CfoFree,
        ];
        all.into_iter()
            .find(|d| d.tag() == name)
            .ok_or(HarnessError::Unknown {
                what: "detector",
                name: name.to_string(),
            })
    }

    pub fn task(self) -> SweepTask {
        use Detector::*;
        match self {
            Viterbi | Parallel | Ann => SweepTask::Convdec,
            Mf | Zf | Lmmse | Mld | CelMf | CelZf | CelLmmse | DirectL | DnnPic => {
                SweepTask::Mimodet
            }
            Catmud1 | Catmud3 | PicBaseline | CfoFree => SweepTask::Ofdmasync,
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Everything one sweep needs from a config file.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub task: SweepTask,
    pub detector: Detector,
    pub ebn0_start: f64,
    pub ebn0_stop: f64,
    pub ebn0_step: f64,
    /// Trial cap per grid point.
    pub trials: u64,
    /// Stop a point once this many block errors accumulate (0 disables
    /// early stopping; the cap then decides alone).
    pub min_events: u64,
    pub seed: u64,
    pub shards: u64,
}

impl SweepConfig {
    /// Read the sweep keys (`task`, `detector`, `ebn0_start`, `ebn0_stop`,
    /// `ebn0_step`, `trials`, `min_events`, `seed`, `shards`) and apply the
    /// seed override.
    pub fn from_map(map: &ConfigMap) -> Result<Self, HarnessError> {
        let task = SweepTask::parse(map.require("task")?)?;
        let detector = Detector::parse(map.require("detector")?)?;
        let cfg = SweepConfig {
            task,
            detector,
            ebn0_start: map.require_f64("ebn0_start")?,
            ebn0_stop: map.require_f64("ebn0_stop")?,
            ebn0_step: map.get_f64("ebn0_step", 1.0)?,
            trials: map.get_u64("trials", 10_000)?,
            min_events: map.get_u64("min_events", 200)?,
            seed: super::config::effective_seed(map.get_u64("seed", 1)?)?,
            shards: map.get_u64("shards", 1)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |key: &str, msg: String| HarnessError::ConfigValue {
            key: key.into(),
            msg,
        };
        if self.detector.task() != self.task {
            return Err(HarnessError::DetectorTask {
                detector: self.detector.tag().into(),
                task: self.task.tag().into(),
            });
        }
        if !self.ebn0_start.is_finite() || !self.ebn0_stop.is_finite() {
            return Err(bad("ebn0_start", "grid endpoints must be finite".into()));
        }
        if !(self.ebn0_step > 0.0) || !self.ebn0_step.is_finite() {
            return Err(bad("ebn0_step", format!("step {} must be > 0", self.ebn0_step)));
        }
        if self.ebn0_stop < self.ebn0_start {
            return Err(bad("ebn0_stop", "grid stop lies before start".into()));
        }
        if self.trials == 0 {
            return Err(bad("trials", "need at least one trial".into()));
        }
        if self.shards == 0 {
            return Err(bad("shards", "need at least one shard".into()));
        }
        Ok(())
    }

    /// The Eb/N0 grid: `start, start+step, …` up to `stop` inclusive
    /// (with a half-ulp-scale tolerance so fractional steps land).
    pub fn grid(&self) -> Vec<f64> {
        let mut points = Vec::new();
        let mut i = 0u64;
        loop {
            let p = self.ebn0_start + self.ebn0_step * i as f64;
            if p > self.ebn0_stop + 1e-9 {
                break;
            }
            points.push(p);
            i += 1;
        }
        points
    }
}

/// Trained models and fixed link parameters a sweep detects with.
///
/// Only the fields the chosen detector needs are populated; the rest stay
/// `None` so classical baselines run without any model directory.
pub struct SweepContext {
    // convdec
    pub conv_spec: ConvCodeSpec,
    pub plan: SegmentPlan,
    pub info_bits: usize,
    pub ann: Option<Network>,
    // mimodet
    pub users: usize,
    pub rx_antennas: usize,
    pub cel: Option<Network>,
    pub direct: Option<Network>,
    pub pic_stack: Option<PicStack>,
    // ofdmasync
    pub ofdma: OfdmaConfig,
    pub bank: Option<BranchBank>,
    pub pic_iterations: usize,
}

impl SweepContext {
    /// A context with defaults everywhere and no models loaded — enough
    /// for every classical detector.
    pub fn classical() -> Self {
        SweepContext {
            conv_spec: ConvCodeSpec::default_rate_half(),
            plan: SegmentPlan::new(4, 8).expect("static plan"),
            info_bits: 30,
            ann: None,
            users: 4,
            rx_antennas: 8,
            cel: None,
            direct: None,
            pic_stack: None,
            ofdma: OfdmaConfig::default_case(),
            bank: None,
            pic_iterations: 3,
        }
    }

    pub fn bits_per_trial(&self, task: SweepTask) -> u64 {
        match task {
            SweepTask::Convdec => self.info_bits as u64,
            SweepTask::Mimodet => self.users as u64,
            SweepTask::Ofdmasync => (self.ofdma.users() * self.ofdma.bits_per_user()) as u64,
        }
    }

    pub fn blocks_per_trial(&self, task: SweepTask) -> u64 {
        match task {
            SweepTask::Convdec | SweepTask::Mimodet => 1,
            SweepTask::Ofdmasync => self.ofdma.users() as u64,
        }
    }
}

fn model_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.phynn"))
}

fn load_named(dir: &Path, name: &str) -> Result<Network, HarnessError> {
    let path = model_path(dir, name);
    load_model(&path).map_err(|e| HarnessError::Model {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

fn check_dims(name: &str, net: &Network, in_dim: usize, out_dim: usize) -> Result<(), HarnessError> {
    if net.input_dim() != in_dim || net.output_dim() != out_dim {
        return Err(HarnessError::Model {
            path: format!("{name}.phynn"),
            msg: format!(
                "shape {}x{} does not fit the configured link ({}x{})",
                net.input_dim(),
                net.output_dim(),
                in_dim,
                out_dim
            ),
        });
    }
    Ok(())
}

/// Format an operating point for a file name (`5` not `5.0`, `2.5` as is).
pub(crate) fn fmt_db(v: f64) -> String {
    format!("{v}")
}

/// Read the link keys and whatever model files `detector` needs from
/// `model_dir` (key `model_dir`; required only for learned detectors).
pub fn load_sweep_context(
    map: &ConfigMap,
    detector: Detector,
) -> Result<SweepContext, HarnessError> {
    let mut ctx = SweepContext::classical();

    // Link geometry, shared with the training side.
    let segments = map.get_usize("segments", 4)?;
    let steps = map.get_usize("steps_per_segment", 8)?;
    ctx.plan = SegmentPlan::new(segments, steps)?;
    ctx.info_bits = ctx.plan.total_steps() - ctx.conv_spec.memory();
    ctx.users = map.get_usize("users", 4)?;
    ctx.rx_antennas = map.get_usize("rx_antennas", 8)?;
    if detector.task() == SweepTask::Ofdmasync {
        ctx.ofdma = OfdmaConfig::new(
            map.get_usize("subcarriers", 32)?,
            map.get_usize("users", 4)?,
            map.get_usize("cp_len", 8)?,
            map.get_usize("taps", 8)?,
            map.get_f64("cfo_max", 0.4)?,
            map.get_usize("subranges", 8)?,
        )?;
        ctx.pic_iterations = map.get_usize("pic_iterations", 3)?;
    }

    let needs_models = matches!(
        detector,
        Detector::Ann
            | Detector::CelMf
            | Detector::CelZf
            | Detector::CelLmmse
            | Detector::DirectL
            | Detector::DnnPic
            | Detector::Catmud1
            | Detector::Catmud3
    );
    if !needs_models {
        return Ok(ctx);
    }
    let dir = PathBuf::from(map.require("model_dir")?);

    match detector {
        Detector::Ann => {
            let net = load_named(&dir, "segment_ann")?;
            let in_dim = 2 * steps + ctx.conv_spec.num_states();
            check_dims("segment_ann", &net, in_dim, steps)?;
            ctx.ann = Some(net);
        }
        Detector::CelMf | Detector::CelZf | Detector::CelLmmse => {
            let net = load_named(&dir, "cel")?;
            check_dims("cel", &net, 2, 2)?;
            ctx.cel = Some(net);
        }
        Detector::DirectL => {
            let net = load_named(&dir, "direct_l")?;
            let in_dim = 2 * ctx.rx_antennas + 2 * ctx.rx_antennas * ctx.users;
            check_dims("direct_l", &net, in_dim, 1 << ctx.users)?;
            ctx.direct = Some(net);
        }
        Detector::DnnPic => {
            let layers = map.get_usize("layers", 3)?;
            let points = map.get_list("points", &[0.0, 5.0, 10.0])?;
            if layers == 0 || points.is_empty() {
                return Err(HarnessError::ConfigValue {
                    key: "layers".into(),
                    msg: "layered detector needs layers >= 1 and a nonempty points list".into(),
                });
            }
            let mut stack = Vec::with_capacity(points.len());
            for &p in &points {
                let name = format!("dnn_pic_p{}", fmt_db(p));
                let net = load_named(&dir, &name)?;
                check_dims(&name, &net, 4 * ctx.rx_antennas, 2)?;
                stack.push((p, net));
            }
            stack.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite points"));
            ctx.pic_stack = Some(PicStack {
                layers,
                points: stack,
            });
        }
        Detector::Catmud1 | Detector::Catmud3 => {
            let cfg = ctx.ofdma.clone();
            let mut classifiers = Vec::with_capacity(cfg.users());
            for k in 0..cfg.users() {
                classifiers.push(load_named(&dir, &format!("classifier_u{k}"))?);
            }
            let mut branches = Vec::with_capacity(cfg.users());
            for k in 0..cfg.users() {
                let mut row = Vec::with_capacity(cfg.subranges());
                for q in 0..cfg.subranges() {
                    row.push(load_named(&dir, &format!("branch_u{k}_q{q}"))?);
                }
                branches.push(row);
            }
            let bank =
                BranchBank::from_parts(cfg, classifiers, branches).map_err(|e| {
                    HarnessError::Model {
                        path: dir.display().to_string(),
                        msg: e.to_string(),
                    }
                })?;
            ctx.bank = Some(bank);
        }
        _ => unreachable!("handled by needs_models"),
    }
    Ok(ctx)
}

/// One CSV line of a sweep result.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub task: SweepTask,
    pub detector: Detector,
    pub ebn0_db: f64,
    pub trials: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub block_errors: u64,
    pub bler: f64,
    pub seed: u64,
    pub elapsed_ms: u64,
}

/// Exact column schema of every sweep CSV.
pub const CSV_HEADER: &str =
    "task,detector,ebn0_db,trials,bit_errors,ber,block_errors,bler,seed,elapsed_ms";

impl ResultRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.task,
            self.detector,
            self.ebn0_db,
            self.trials,
            self.bit_errors,
            self.ber,
            self.block_errors,
            self.bler,
            self.seed,
            self.elapsed_ms
        )
    }
}

/// Write rows under the fixed header.
pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<(), HarnessError> {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    let mut file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    file.write_all(out.as_bytes())
        .map_err(|e| HarnessError::io(path, e))
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    bit_errors: u64,
    block_errors: u64,
    trials: u64,
}

impl Counts {
    fn add(&mut self, other: Counts) {
        self.bit_errors += other.bit_errors;
        self.block_errors += other.block_errors;
        self.trials += other.trials;
    }
}

/// Compare detected against true bits block-wise.
fn tally(truth: &[u8], detected: &[u8], block_len: usize, counts: &mut Counts) {
    debug_assert_eq!(truth.len(), detected.len());
    let mut offset = 0;
    while offset < truth.len() {
        let end = (offset + block_len).min(truth.len());
        let errs = truth[offset..end]
            .iter()
            .zip(&detected[offset..end])
            .filter(|(a, b)| a != b)
            .count() as u64;
        counts.bit_errors += errs;
        counts.block_errors += u64::from(errs > 0);
        offset = end;
    }
}

fn run_trial(
    cfg: &SweepConfig,
    ctx: &SweepContext,
    ebn0_db: f64,
    rng: &mut RngStream,
) -> Result<Counts, HarnessError> {
    let mut counts = Counts {
        trials: 1,
        ..Counts::default()
    };
    match cfg.task {
        SweepTask::Convdec => {
            let info = random_bits(ctx.info_bits, rng);
            let with_tail = append_tail(&info, &ctx.conv_spec);
            let coded = conv_encode(&ctx.conv_spec, &with_tail);
            let soft = bpsk_llr_channel(&coded, ebn0_db, rng);
            let decoded = match cfg.detector {
                Detector::Viterbi => viterbi_mld(&ctx.conv_spec, &soft)?,
                Detector::Parallel => parallel_mld_decode(&ctx.conv_spec, &ctx.plan, &soft)?,
                Detector::Ann => ann_parallel_decode(
                    &ctx.conv_spec,
                    &ctx.plan,
                    ctx.ann.as_ref().expect("checked at load"),
                    &soft,
                )?,
                _ => unreachable!("validated"),
            };
            tally(&info, &decoded[..ctx.info_bits], ctx.info_bits, &mut counts);
        }
        SweepTask::Mimodet => {
            let scene = gen_mimo_scene(ctx.users, ctx.rx_antennas, ebn0_db, rng);
            let detected = match cfg.detector {
                Detector::Mf => mf_detect(&scene)?,
                Detector::Zf => zf_detect(&scene)?,
                Detector::Lmmse => lmmse_detect(&scene)?,
                Detector::Mld => mld_detect(&scene)?,
                Detector::CelMf => {
                    cel_detect(&scene, ctx.cel.as_ref().expect("checked"), CelEqualizer::Mf)?
                }
                Detector::CelZf => {
                    cel_detect(&scene, ctx.cel.as_ref().expect("checked"), CelEqualizer::Zf)?
                }
                Detector::CelLmmse => cel_detect(
                    &scene,
                    ctx.cel.as_ref().expect("checked"),
                    CelEqualizer::Lmmse,
                )?,
                Detector::DirectL => {
                    direct_l_detect(&scene, ctx.direct.as_ref().expect("checked"))?
                }
                Detector::DnnPic => {
                    dnn_pic_detect(&scene, ctx.pic_stack.as_ref().expect("checked"))?
                }
                _ => unreachable!("validated"),
            };
            tally(&scene.bits, &detected, ctx.users, &mut counts);
        }
        SweepTask::Ofdmasync => {
            let scene = if cfg.detector == Detector::CfoFree {
                gen_scene_cfo_free(&ctx.ofdma, ebn0_db, rng)
            } else {
                gen_ofdma_scene(&ctx.ofdma, ebn0_db, rng)
            };
            let detected = match cfg.detector {
                Detector::Catmud1 => {
                    cat_mud_detect(&scene, ctx.bank.as_ref().expect("checked"), 1)?
                }
                Detector::Catmud3 => {
                    cat_mud_detect(&scene, ctx.bank.as_ref().expect("checked"), 3)?
                }
                Detector::PicBaseline => pic_baseline_detect(
                    &scene,
                    &scene.subrange_center_estimates(),
                    ctx.pic_iterations,
                )?,
                Detector::CfoFree => cfo_free_reference(&scene)?,
                _ => unreachable!("validated"),
            };
            let block = ctx.ofdma.bits_per_user();
            for (truth, hat) in scene.bits().iter().zip(&detected) {
                tally(truth, hat, block, &mut counts);
            }
        }
    }
    Ok(counts)
}

struct ShardState {
    rng: RngStream,
    remaining: u64,
}

/// Trials shard `s` owns out of `total` split `shards` ways.
fn shard_quota(total: u64, shards: u64, s: u64) -> u64 {
    total / shards + u64::from(s < total % shards)
}

/// Per-shard trials per synchronization round: an eighth of the per-shard
/// budget, clamped so rounds neither degenerate nor overshoot wildly.
fn round_quota(per_shard: u64) -> u64 {
    (per_shard / 8).clamp(1, 65_536)
}

/// Run the sweep, one result row per grid point (grid order).
pub fn run_sweep(cfg: &SweepConfig, ctx: &SweepContext) -> Result<Vec<ResultRow>, HarnessError> {
    cfg.validate()?;
    let grid = cfg.grid();
    let bits_per_trial = ctx.bits_per_trial(cfg.task);
    let blocks_per_trial = ctx.blocks_per_trial(cfg.task);
    let mut rows = Vec::with_capacity(grid.len());

    for &point in &grid {
        let t0 = Instant::now();
        let mut shards: Vec<ShardState> = (0..cfg.shards)
            .map(|s| ShardState {
                rng: RngStream::new(cfg.seed, s),
                remaining: shard_quota(cfg.trials, cfg.shards, s),
            })
            .collect();
        let round = round_quota(shard_quota(cfg.trials, cfg.shards, 0).max(1));
        let mut total = Counts::default();

        loop {
            let chunk_results: Vec<Result<Counts, HarnessError>> = shards
                .par_iter_mut()
                .map(|shard| {
                    let n = shard.remaining.min(round);
                    let mut acc = Counts::default();
                    for _ in 0..n {
                        acc.add(run_trial(cfg, ctx, point, &mut shard.rng)?);
                    }
                    shard.remaining -= n;
                    Ok(acc)
                })
                .collect();
            for result in chunk_results {
                total.add(result?);
            }
            let exhausted = shards.iter().all(|s| s.remaining == 0);
            let satisfied = cfg.min_events > 0 && total.block_errors >= cfg.min_events;
            if exhausted || satisfied {
                break;
            }
        }

        let bits = total.trials * bits_per_trial;
        let blocks = total.trials * blocks_per_trial;
        rows.push(ResultRow {
            task: cfg.task,
            detector: cfg.detector,
            ebn0_db: point,
            trials: total.trials,
            bit_errors: total.bit_errors,
            ber: total.bit_errors as f64 / bits as f64,
            block_errors: total.block_errors,
            bler: total.block_errors as f64 / blocks as f64,
            seed: cfg.seed,
            elapsed_ms: t0.elapsed().as_millis() as u64,
        });
    }
    Ok(rows)
}
