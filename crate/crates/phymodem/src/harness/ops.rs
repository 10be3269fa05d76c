//! Machine-readable work accounting for the segment decoder's two paths.

use std::path::Path;

use crate::convdec::{count_ops_report, ConvCodeSpec};
use crate::nnet::load_model;
use crate::sigproc::RngStream;

use super::config::HarnessError;

/// Build the operations report as CSV with `#`-prefixed machine metadata.
///
/// Counts are structural; medians come from live timing of repeated
/// single-segment decodes. The learned-to-exact ratio is informational —
/// relative cost depends on hardware and is reported, never judged.
pub fn ops_report_text(model_path: &Path, timed_calls: usize, seed: u64) -> Result<String, HarnessError> {
    let net = load_model(model_path).map_err(|e| HarnessError::Model {
        path: model_path.display().to_string(),
        msg: e.to_string(),
    })?;
    let spec = ConvCodeSpec::default_rate_half();
    let report = count_ops_report(&spec, &net, timed_calls, &mut RngStream::new(seed, 77));

    let cpus = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let mut out = String::new();
    out.push_str(&format!(
        "# os={} arch={} logical_cpus={}\n",
        std::env::consts::OS,
        std::env::consts::ARCH,
        cpus
    ));
    out.push_str("metric,value\n");
    out.push_str(&format!("num_states,{}\n", report.num_states));
    out.push_str(&format!("steps_per_segment,{}\n", report.steps_per_segment));
    out.push_str(&format!("mld_branch_evals,{}\n", report.mld_branch_evals));
    out.push_str(&format!("ann_macs_per_start,{}\n", report.ann_macs_per_start));
    out.push_str(&format!(
        "ann_macs_all_starts,{}\n",
        report.ann_macs_all_starts
    ));
    out.push_str(&format!("mld_median_ns,{}\n", report.mld_median_ns));
    out.push_str(&format!("ann_median_ns,{}\n", report.ann_median_ns));
    out.push_str(&format!("timed_calls,{}\n", report.timed_calls));
    out.push_str(&format!(
        "ann_to_mld_median_ratio,{:.3}\n",
        report.ann_median_ns as f64 / report.mld_median_ns.max(1) as f64
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnet::{network_init, save_model, Activation, LayerSpec};

    #[test]
    fn report_covers_counts_medians_and_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("segment_ann.phynn");
        let specs = [
            LayerSpec::new(20, 16, Activation::Relu),
            LayerSpec::new(16, 8, Activation::Sigmoid),
        ];
        let net = network_init(&specs, &mut RngStream::new(4, 0)).unwrap();
        save_model(&net, &path).unwrap();

        let text = ops_report_text(&path, 15, 3).unwrap();
        assert!(text.starts_with("# os="));
        assert!(text.contains("metric,value\n"));
        assert!(text.contains("mld_branch_evals,64\n"));
        // 20*16 + 16*8 MACs.
        assert!(text.contains("ann_macs_per_start,448\n"));
        assert!(text.contains("timed_calls,15\n"));
        assert!(text.contains("ann_to_mld_median_ratio,"));
    }

    #[test]
    fn missing_model_is_a_model_error() {
        let err = ops_report_text(Path::new("/nonexistent/x.phynn"), 5, 1).unwrap_err();
        assert!(matches!(err, HarnessError::Model { .. }));
    }
}
