//! The acceptance gate: run every case recipe end to end and evaluate
//! the twelve criteria, printing one verdict line per criterion.
//!
//! Models and sweep artifacts land in `CARGO_TARGET_TMPDIR`, so reruns
//! reuse cached trainings while sweeps and verdicts are always fresh.
//! Run with `cargo test --test acceptance -- --nocapture` to watch the
//! verdict lines stream as criteria finish.

use phymodem::harness::{run_acceptance, AcceptContext};

#[test]
fn acceptance_criteria() {
    let work = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let results = run_acceptance(&AcceptContext::new(&work)).expect("acceptance pipeline runs");

    let mut failed = Vec::new();
    for result in &results {
        println!("{}", result.line());
        if !result.passed {
            failed.push(result.line());
        }
    }
    assert_eq!(results.len(), 12, "expected twelve criteria");
    assert!(
        failed.is_empty(),
        "{} acceptance criteria failed:\n{}",
        failed.len(),
        failed.join("\n")
    );
}
