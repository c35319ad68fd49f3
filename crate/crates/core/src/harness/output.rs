//! CSV/JSON result writers. Output is byte-deterministic for a given trace.

use std::fmt::Write as _;
use std::path::Path;

use super::config::ExperimentConfig;
use super::runner::{ExperimentResult, RegretTrace};
use super::HarnessResult;
use crate::bounds::BoundReport;

/// Formats with 10 significant digits; round-trips through `f64::parse` to the
/// same printed form.
pub fn fmt_g10(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.9e}")
}

/// Renders the per-step CSV. Mismatch columns are filled on measured rows and
/// left empty elsewhere.
pub fn render_csv(trace: &RegretTrace) -> String {
    let has_mismatch = !trace.mismatch.is_empty();
    let mut out = String::new();
    if has_mismatch {
        out.push_str("step,mean_cum_regret,se_cum_regret,kl_mismatch,hellinger_mismatch,lemma5_bound\n");
    } else {
        out.push_str("step,mean_cum_regret,se_cum_regret\n");
    }
    for t in 0..trace.mean_cum.len() {
        let _ = write!(out, "{},{},{}", t + 1, fmt_g10(trace.mean_cum[t]), fmt_g10(trace.se_cum[t]));
        if has_mismatch {
            match trace.mismatch.iter().find(|row| row.t == t) {
                Some(row) => {
                    let _ = write!(
                        out,
                        ",{},{},{}",
                        fmt_g10(row.mean_kl),
                        fmt_g10(row.mean_hellinger),
                        fmt_g10(row.lemma5)
                    );
                }
                None => out.push_str(",,,"),
            }
        }
        out.push('\n');
    }
    out
}

/// JSON document: the bound report plus a config echo.
pub fn render_json(report: &BoundReport, config: &ExperimentConfig) -> HarnessResult<String> {
    #[derive(serde::Serialize)]
    struct Doc<'a> {
        report: &'a BoundReport,
        config: &'a ExperimentConfig,
    }
    let mut s = serde_json::to_string_pretty(&Doc { report, config })?;
    s.push('\n');
    Ok(s)
}

/// Writes the CSV and JSON files for one experiment.
pub fn write_outputs(
    result: &ExperimentResult,
    config: &ExperimentConfig,
    csv_path: &Path,
    json_path: &Path,
) -> HarnessResult<()> {
    if let Some(dir) = csv_path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    if let Some(dir) = json_path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(csv_path, render_csv(&result.trace))?;
    std::fs::write(json_path, render_json(&result.report, config)?)?;
    Ok(())
}
