//! Monte Carlo measurement rig: deterministic BER/BLER sweeps over the
//! three link setups, training orchestration with on-disk model caching,
//! self-check suites, and end-to-end case recipes with printed verdicts.
//!
//! Sweeps shard per SNR point: shard `s` owns the random stream
//! `(seed, s)` and shards advance in synchronized rounds, so results
//! depend only on the config — never on scheduling. Because every point
//! restarts the same per-shard streams, points share their random draws
//! (common random numbers), which pairs the curves and lowers the variance
//! of cross-detector comparisons at equal trial counts.
//!
//! All error counts are integers; rates are derived at the end, so a
//! result row's `ber * bits = bit_errors` reproduces the count exactly.

mod accept;
mod config;
mod ops;
mod recipe;
mod stats;
mod sweep;
mod training;
mod verify;

pub use accept::{run_acceptance, AcceptContext, CriterionResult};
pub use config::{effective_seed, parse_config_file, parse_config_text, ConfigMap, HarnessError};
pub use ops::ops_report_text;
pub use recipe::{recipe_names, run_recipe, RecipeReport};
pub use stats::{crossing_db, rate_le_3sigma, RatePoint};
pub use sweep::{
    load_sweep_context, run_sweep, write_csv, Detector, ResultRow, SweepConfig, SweepContext,
    SweepTask, CSV_HEADER,
};
pub use training::{run_training, TrainTask, TrainingOutcome};
pub use verify::{run_verify, CheckResult, VerifySuite};
