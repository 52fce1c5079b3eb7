//! Run log files: UTF-8 `key=value` lines describing one executed instance.
//!
//! ```text
//! instance_id=camp.grid.run-0
//! sweep_id=camp/grid/F=0.01;k=0.05
//! start=1700000000
//! end=1700000042
//! exit_code=0
//! param.seed=42
//! metric.runtime=41.7
//! input=camp.grid.run-0-settings.txt
//! output=camp.grid.run-0-histogram.tsv
//! ```
//!
//! `instance_id`, `sweep_id`, `start`, `end`, and `exit_code` are mandatory;
//! `input=`/`output=` may repeat; `param.<name>=` and `metric.<name>=` carry
//! the run's parameters and numeric metrics. Blank lines and `#` comments are
//! skipped; unknown keys are ignored so logs may carry extra operational
//! fields; a repeated scalar key takes its last value.

use std::fs;
use std::path::Path;

use ckn_core::RunLog;

use crate::error::{Error, Result};

pub fn read_run_log(path: &Path) -> Result<RunLog> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_run_log(&text, path)
}

pub fn parse_run_log(text: &str, path: &Path) -> Result<RunLog> {
    let bad = |message: String| Error::format(path, message);

    let mut instance_id = None;
    let mut sweep_id = None;
    let mut start = None;
    let mut end = None;
    let mut exit_code = None;
    let mut log = RunLog::new("", "");

    for (number, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line {}: expected key=value, got {line:?}", number + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "instance_id" => instance_id = Some(value.to_string()),
            "sweep_id" => sweep_id = Some(value.to_string()),
            "start" => start = Some(parse_int(key, value, number).map_err(&bad)?),
            "end" => end = Some(parse_int(key, value, number).map_err(&bad)?),
            "exit_code" => exit_code = Some(parse_int(key, value, number).map_err(&bad)?),
            "input" => log.inputs.push(value.to_string()),
            "output" => log.outputs.push(value.to_string()),
            _ => {
                if let Some(name) = key.strip_prefix("param.") {
                    if name.is_empty() {
                        return Err(bad(format!("line {}: empty parameter name", number + 1)));
                    }
                    log.params.insert(name.to_string(), value.to_string());
                } else if let Some(name) = key.strip_prefix("metric.") {
                    if name.is_empty() {
                        return Err(bad(format!("line {}: empty metric name", number + 1)));
                    }
                    let parsed: f64 = value.parse().map_err(|_| {
                        bad(format!(
                            "line {}: metric {name:?} must be numeric, got {value:?}",
                            number + 1
                        ))
                    })?;
                    log.metrics.insert(name.to_string(), parsed);
                }
                // Anything else is an operational field we don't model.
            }
        }
    }

    let mut missing = Vec::new();
    for (key, present) in [
        ("instance_id", instance_id.is_some()),
        ("sweep_id", sweep_id.is_some()),
        ("start", start.is_some()),
        ("end", end.is_some()),
        ("exit_code", exit_code.is_some()),
    ] {
        if !present {
            missing.push(key);
        }
    }
    if !missing.is_empty() {
        return Err(bad(format!("missing mandatory keys: {}", missing.join(", "))));
    }

    log.instance_id = instance_id.unwrap();
    log.sweep_id = sweep_id.unwrap();
    log.start = start.unwrap();
    log.end = end.unwrap();
    log.exit_code = exit_code.unwrap();
    Ok(log)
}

/// Render a run log in the file format; inverse of [`parse_run_log`].
pub fn run_log_to_text(log: &RunLog) -> String {
    let mut out = String::new();
    out.push_str(&format!("instance_id={}\n", log.instance_id));
    out.push_str(&format!("sweep_id={}\n", log.sweep_id));
    out.push_str(&format!("start={}\n", log.start));
    out.push_str(&format!("end={}\n", log.end));
    out.push_str(&format!("exit_code={}\n", log.exit_code));
    for (name, value) in &log.params {
        out.push_str(&format!("param.{name}={value}\n"));
    }
    for (name, value) in &log.metrics {
        out.push_str(&format!("metric.{name}={value}\n"));
    }
    for input in &log.inputs {
        out.push_str(&format!("input={input}\n"));
    }
    for output in &log.outputs {
        out.push_str(&format!("output={output}\n"));
    }
    out
}

fn parse_int(key: &str, value: &str, line_index: usize) -> std::result::Result<i64, String> {
    value.parse().map_err(|_| {
        format!("line {}: {key} must be an integer, got {value:?}", line_index + 1)
    })
}
