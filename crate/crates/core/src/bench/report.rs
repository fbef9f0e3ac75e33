//! Report emission: summary CSVs, per-scenario histogram CSVs, a stats
//! JSON, and the raw-sample JSON that makes re-emission byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use crate::bench::{histogram, BenchReport, HistogramData, Scenario};
use crate::error::{Error, Result};

pub const RAW_FILE: &str = "raw_samples.json";
pub const DEFAULT_BINS: usize = 50;

fn format_float(v: f64) -> String {
    format!("{v:.6}")
}

fn scenario_slug(s: Scenario) -> String {
    s.name().to_ascii_lowercase()
}

fn histogram_csv(hist: &HistogramData) -> String {
    let mut out = String::from("bin_left,bin_right,count,overlay\n");
    for i in 0..hist.counts.len() {
        let overlay = if hist.overlay.is_empty() {
            String::new()
        } else {
            format_float(hist.overlay[i])
        };
        let _ = writeln!(
            out,
            "{},{},{},{}",
            format_float(hist.edges[i]),
            format_float(hist.edges[i + 1]),
            hist.counts[i],
            overlay
        );
    }
    out
}

/// Writes `resources.csv`, `metrics.csv`, per-scenario time and memory
/// histogram CSVs, `stats.json`, and the raw-sample file. Content is
/// deterministic given the report (timing values are whatever was
/// measured; re-emitting from the raw file reproduces every byte).
pub fn emit_report(report: &BenchReport, out_dir: impl AsRef<Path>) -> Result<Vec<String>> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let mut write = |name: &str, content: &str| -> Result<()> {
        std::fs::write(out_dir.join(name), content)?;
        written.push(name.to_string());
        Ok(())
    };

    let summaries = report.summaries();

    let mut resources =
        String::from("scenario,inference_time_us,working_set_bytes,transient_bytes,model_size_bytes\n");
    for s in &summaries {
        let _ = writeln!(
            resources,
            "{},{},{},{},{}",
            s.scenario.name(),
            format_float(s.mean_inference_time_us),
            format_float(s.mean_working_set_bytes),
            format_float(s.mean_transient_bytes),
            format_float(s.mean_model_size_bytes),
        );
    }
    write("resources.csv", &resources)?;

    let mut metrics = String::from("scenario,accuracy,precision,recall,f1\n");
    for s in &summaries {
        let _ = writeln!(
            metrics,
            "{},{},{},{},{}",
            s.scenario.name(),
            format_float(s.mean_accuracy),
            format_float(s.mean_precision),
            format_float(s.mean_recall),
            format_float(s.mean_f1),
        );
    }
    write("metrics.csv", &metrics)?;

    let mut stats = serde_json::Map::new();
    for &scenario in &report.scenario_order {
        let samples = report.combined_samples(scenario);
        if samples.is_empty() {
            continue;
        }
        let times: Vec<f64> = samples.iter().map(|s| s.inference_time_us).collect();
        let memory: Vec<f64> = samples.iter().map(|s| s.memory_working_set as f64).collect();
        let time_hist = histogram(&times, DEFAULT_BINS)?;
        let memory_hist = histogram(&memory, DEFAULT_BINS)?;
        write(
            &format!("{}_time_hist.csv", scenario_slug(scenario)),
            &histogram_csv(&time_hist),
        )?;
        write(
            &format!("{}_memory_hist.csv", scenario_slug(scenario)),
            &histogram_csv(&memory_hist),
        )?;

        let summary = report.summary(scenario).unwrap();
        stats.insert(
            scenario.name().to_string(),
            serde_json::json!({
                "time_us": time_hist.stats,
                "memory_working_set_bytes": memory_hist.stats,
                "mean_inference_time_us": summary.mean_inference_time_us,
                "mean_working_set_bytes": summary.mean_working_set_bytes,
                "mean_transient_bytes": summary.mean_transient_bytes,
                "mean_model_size_bytes": summary.mean_model_size_bytes,
                "mean_accuracy": summary.mean_accuracy,
            }),
        );
    }
    let stats_json = serde_json::to_string_pretty(&serde_json::Value::Object(stats))
        .map_err(|e| Error::Argument(format!("stats serialization: {e}")))?;
    write("stats.json", &stats_json)?;

    let raw = serde_json::to_string(report)
        .map_err(|e| Error::Argument(format!("raw-report serialization: {e}")))?;
    write(RAW_FILE, &raw)?;

    Ok(written)
}

/// Loads the raw-sample file written by [`emit_report`], enabling replay.
pub fn read_raw_report(dir: impl AsRef<Path>) -> Result<BenchReport> {
    let path = dir.as_ref().join(RAW_FILE);
    let text = std::fs::read_to_string(&path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Format {
            offset: 0,
            detail: format!("{}: {e}", path.display()),
        })
}
