//! Campaign data generator: run the reaction-diffusion solver over every
//! sweep of a campaign spec and write real artifacts — settings, histograms,
//! and run logs — that flow through directory ingestion unchanged.
//!
//! Per sweep (one run each, numbered in enumeration order within its group):
//!
//! * `<instance>-settings.txt` — key=value of the effective solver
//!   parameters including the per-run seed (spec seed + run index).
//! * `<instance>-histogram.tsv` — final-state probability distribution,
//!   `bin<TAB>frequency` lines in a `# u` and a `# v` section.
//! * `<instance>.log` — run log referencing the settings file as input and
//!   the histogram as output, with wall-clock runtime and output size
//!   metrics.
//!
//! The campaign spec is copied to `campaign.json` so the output directory is
//! self-contained. Failed runs (unstable parameters, IO trouble) produce a
//! log with a nonzero exit code and no histogram; generation continues.
//!
//! Logged parameters are the full effective solver configuration (not just
//! the swept values), so every instance carries what signature extraction
//! needs. The seed is recorded in the settings file only: reruns of a sweep
//! differ by seed, and seed is deliberately not part of the "has this been
//! run already" parameter map. Runs also record the placeholder co-design
//! property `io_method=posix`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use ckn_core::{
    params_from_map, params_to_map, simulate, sweep_combos, sweep_id, CampaignSpec,
    GrayScottParams, PdfHistogram, RunLog,
};

use crate::error::{Error, Result};
use crate::run_log::run_log_to_text;
use crate::spec_file::spec_to_json;

/// What [`generate_campaign`] produced.
#[derive(Debug)]
pub struct GenerationReport {
    pub spec_path: PathBuf,
    /// Total runs attempted (= number of sweeps).
    pub runs: usize,
    /// (instance id, reason) per failed run.
    pub failures: Vec<(String, String)>,
}

impl GenerationReport {
    pub fn summary_line(&self) -> String {
        format!("runs={} ok={} failed={}", self.runs, self.runs - self.failures.len(), self.failures.len())
    }
}

/// Simulate every sweep of `spec` and write its artifacts under `out_dir`.
pub fn generate_campaign(spec: &CampaignSpec, out_dir: &Path) -> Result<GenerationReport> {
    fs::create_dir_all(out_dir).map_err(|e| Error::persist(out_dir, e))?;
    let spec_path = out_dir.join("campaign.json");
    fs::write(&spec_path, spec_to_json(spec)).map_err(|e| Error::persist(&spec_path, e))?;

    let mut report = GenerationReport { spec_path, runs: 0, failures: Vec::new() };
    for group in &spec.sweep_groups {
        for (index, combo) in sweep_combos(group)?.into_iter().enumerate() {
            let instance = format!("{}.{}.run-{index}", spec.name, group.name);
            let sweep = sweep_id(&spec.name, &group.name, &combo);
            report.runs += 1;
            if let Err(reason) = run_one(out_dir, &instance, &sweep, &combo, index as u64) {
                report.failures.push((instance, reason));
            }
        }
    }
    Ok(report)
}

/// Execute one sweep: returns Err(reason) on failure, after still writing a
/// log with a nonzero exit code whenever possible.
fn run_one(
    out_dir: &Path,
    instance: &str,
    sweep: &str,
    combo: &[(String, String)],
    run_index: u64,
) -> std::result::Result<(), String> {
    let combo_map: std::collections::BTreeMap<String, String> = combo.iter().cloned().collect();
    let settings_name = format!("{instance}-settings.txt");
    let histogram_name = format!("{instance}-histogram.tsv");

    let started = Instant::now();
    let start = epoch_seconds();
    let parsed = params_from_map(&combo_map)
        .map(|p| GrayScottParams { seed: p.seed.wrapping_add(run_index), ..p });

    // The settings file always exists: effective parameters for a valid run,
    // the requested values verbatim for an invalid one.
    let settings_map = match &parsed {
        Ok(params) => params_to_map(params),
        Err(_) => combo_map.clone(),
    };
    let settings_write = write_settings(out_dir, &settings_name, &settings_map);

    let mut log = RunLog::new(instance, sweep);
    log.start = start;
    log.inputs.push(settings_name.clone());
    log.params.insert("io_method".to_string(), "posix".to_string());

    let failure = match parsed {
        Ok(params) => {
            let mut solver_params = params_to_map(&params);
            solver_params.remove("seed");
            log.params.extend(solver_params);
            // Swept values verbatim: the sweep's fixed strings win over the
            // canonical float rendering ("0.010" must stay "0.010").
            log.params.extend(combo_map.clone());
            match settings_write
                .map_err(|e| e.to_string())
                .and_then(|()| simulate(&params).map_err(|e| e.to_string()))
                .and_then(|(_, pdf)| {
                    write_histogram(out_dir, &histogram_name, &pdf).map_err(|e| e.to_string())
                }) {
                Ok(bytes) => {
                    log.outputs.push(histogram_name);
                    log.metrics.insert("bytes".to_string(), bytes as f64);
                    None
                }
                Err(reason) => Some(reason),
            }
        }
        Err(e) => {
            // Record at least the requested values so the failure is queryable.
            log.params.extend(combo_map);
            Some(e.to_string())
        }
    };

    log.end = epoch_seconds().max(log.start);
    log.exit_code = i64::from(failure.is_some());
    log.metrics.insert("runtime".to_string(), started.elapsed().as_secs_f64());

    let log_path = out_dir.join(format!("{instance}.log"));
    if let Err(e) = fs::write(&log_path, run_log_to_text(&log)) {
        return Err(format!("failed to write {}: {e}", log_path.display()));
    }
    match failure {
        Some(reason) => Err(reason),
        None => Ok(()),
    }
}

fn epoch_seconds() -> i64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs() as i64).unwrap_or(0)
}

fn write_settings(
    out_dir: &Path,
    name: &str,
    settings: &std::collections::BTreeMap<String, String>,
) -> std::result::Result<(), std::io::Error> {
    let mut text = String::new();
    for (key, value) in settings {
        text.push_str(&format!("{key}={value}\n"));
    }
    fs::write(out_dir.join(name), text)
}

/// Write `bin<TAB>frequency` lines for both fields; returns bytes written.
fn write_histogram(
    out_dir: &Path,
    name: &str,
    pdf: &PdfHistogram,
) -> std::result::Result<usize, std::io::Error> {
    let mut text = String::new();
    for (label, freqs) in [("u", &pdf.u), ("v", &pdf.v)] {
        text.push_str(&format!("# {label}\n"));
        for (bin, freq) in freqs.iter().enumerate() {
            text.push_str(&format!("{bin}\t{freq}\n"));
        }
    }
    fs::write(out_dir.join(name), &text)?;
    Ok(text.len())
}
