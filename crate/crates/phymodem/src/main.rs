//! Command-line front end: train model bundles, run sweeps, execute
//! correctness suites, and reproduce the canned case studies.
//!
//! Every error path exits nonzero after printing a single
//! `error: ...` line to stderr; verdict failures in `verify`, `recipe`,
//! and `accept` also exit nonzero so scripts can gate on them.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use phymodem::harness::{
    effective_seed, load_sweep_context, ops_report_text, parse_config_file, recipe_names,
    run_acceptance, run_recipe, run_sweep, run_training, run_verify, write_csv, AcceptContext,
    ConfigMap, SweepConfig, TrainTask, VerifySuite, CSV_HEADER,
};

#[derive(Parser)]
#[command(
    name = "phymodem",
    version,
    about = "Link-level PHY workbench: classical and learned modem blocks under a reproducible Monte Carlo harness"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a model bundle (convdec-ann, cel, direct-l, dnn-pic, catmud-bank)
    Train {
        /// Training task tag
        #[arg(long)]
        task: String,
        /// Optional `key = value` config file; defaults apply when omitted
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for model files, history CSV, and cache marker
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a BER/BLER sweep from a config file and write one CSV
    Sweep {
        /// `key = value` config file (task, detector, grid, trials, ...)
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a correctness suite: oracle, gradcheck, invariants, or all
    Verify {
        #[arg(long)]
        suite: String,
    },
    /// Run a named case recipe end to end (fig3case, fig6case, fig9case)
    Recipe {
        name: String,
        /// Output directory (defaults to ./<name>)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report analytic op counts and wall-clock medians for the segment decoders
    OpsReport {
        /// Only `convdec` supports operation counting
        #[arg(long)]
        task: String,
        /// Trained segment network (.phynn)
        #[arg(long, default_value = "models/segment_ann.phynn")]
        model: PathBuf,
        /// Timed forward/search calls behind each median
        #[arg(long, default_value_t = 2_000)]
        timed_calls: usize,
    },
    /// Run all recipes and evaluate the twelve acceptance criteria
    Accept {
        /// Working directory for recipes and the determinism rerun
        #[arg(long, default_value = "acceptance")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.cmd {
        Cmd::Train { task, config, out } => {
            let task = TrainTask::parse(&task)?;
            let map = match config {
                Some(path) => parse_config_file(&path)?,
                None => ConfigMap::from_pairs(std::iter::empty::<(String, String)>()),
            };
            let outcome = run_training(task, &map, &out)?;
            println!(
                "{} {} in {:.1} s",
                if outcome.cached { "reused" } else { "trained" },
                task.tag(),
                outcome.train_secs
            );
            for file in &outcome.model_files {
                println!("model {}", file.display());
            }
            println!("history {}", outcome.history_file.display());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Sweep { config, out } => {
            let map = parse_config_file(&config)?;
            let cfg = SweepConfig::from_map(&map)?;
            let ctx = load_sweep_context(&map, cfg.detector)?;
            let rows = run_sweep(&cfg, &ctx)?;
            write_csv(&rows, &out)?;
            println!("{CSV_HEADER}");
            for row in &rows {
                println!("{}", row.csv_line());
            }
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify { suite } => {
            let suites = if suite == "all" {
                VerifySuite::all().to_vec()
            } else {
                vec![VerifySuite::parse(&suite)?]
            };
            let mut failures = 0usize;
            let mut total = 0usize;
            for suite in suites {
                for check in run_verify(suite) {
                    total += 1;
                    failures += usize::from(!check.passed);
                    println!(
                        "{} {} {}: {}",
                        suite.tag(),
                        if check.passed { "PASS" } else { "FAIL" },
                        check.name,
                        check.detail
                    );
                }
            }
            if failures > 0 {
                eprintln!("error: {failures}/{total} checks failed");
                return Ok(ExitCode::FAILURE);
            }
            println!("{total} checks passed");
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Recipe { name, out } => {
            if !recipe_names().contains(&name.as_str()) {
                anyhow::bail!(
                    "unknown recipe {name}; available: {}",
                    recipe_names().join(", ")
                );
            }
            let out = out.unwrap_or_else(|| PathBuf::from(&name));
            let report = run_recipe(&name, &out)?;
            for line in &report.summary {
                println!("{line}");
            }
            for artifact in &report.artifacts {
                println!("artifact {}", artifact.display());
            }
            let failed: Vec<_> = report.verdicts.iter().filter(|v| !v.passed).collect();
            if !failed.is_empty() {
                eprintln!("error: {} bound criteria failed", failed.len());
                return Ok(ExitCode::FAILURE);
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::OpsReport {
            task,
            model,
            timed_calls,
        } => {
            if task != "convdec" {
                anyhow::bail!("ops-report supports only --task convdec, got {task}");
            }
            let seed = effective_seed(1)?;
            print!("{}", ops_report_text(&model, timed_calls, seed)?);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Accept { out } => {
            let results = run_acceptance(&AcceptContext::new(out))?;
            let mut failures = 0usize;
            for result in &results {
                println!("{}", result.line());
                failures += usize::from(!result.passed);
            }
            if failures > 0 {
                eprintln!("error: {failures}/{} criteria failed", results.len());
                return Ok(ExitCode::FAILURE);
            }
            println!("all {} criteria passed", results.len());
            Ok(ExitCode::SUCCESS)
        }
    }
}
