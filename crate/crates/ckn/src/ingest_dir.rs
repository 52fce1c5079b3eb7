//! Directory ingestion: feed every campaign spec (`*.json`) and run log
//! (`*.log`) under a directory into the store, exactly once per file content.
//!
//! Processed contents are tracked by SHA-256 in a ledger file that lives next
//! to the store — never inside the watched directory — so exactly-once
//! delivery survives restarts and works identically in one-shot
//! (post-process) and polling use. A file is reconsidered only when its
//! content changes: fixing a malformed log re-queues it automatically.
//!
//! Two kinds of per-file failure are distinguished. Content problems
//! (unparseable files, contradicting parameters, duplicates) are recorded in
//! the ledger so they are reported once, not on every scan. Ordering problems
//! — a run log whose campaign spec has not arrived yet, or a transient read
//! failure — are *not* recorded, so a later scan retries them; this is what
//! makes polling robust when logs appear before their spec.
//!
//! Specs are processed before logs, each group in path order, making a scan
//! deterministic. Per-file errors never abort a scan. After every successful
//! run ingest the gray-scott signature is materialized on the instance when
//! its parameters allow it.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use ckn_core::{
    extract_signature, ingest_run, ingest_spec, sha256_hex, GraphStore, SchemaRegistry,
    GRAY_SCOTT_SCHEMA,
};

use crate::error::{Error, Result};
use crate::run_log::parse_run_log;
use crate::spec_file::parse_spec;

/// Outcome of one directory scan. `specs` and `runs` count newly ingested
/// files; `skipped` counts files already processed or of unrecognized type.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub specs: usize,
    pub runs: usize,
    pub skipped: usize,
    pub errors: Vec<(PathBuf, String)>,
}

impl IngestReport {
    /// True if the scan mutated the store.
    pub fn changed(&self) -> bool {
        self.specs > 0 || self.runs > 0
    }

    pub fn summary_line(&self) -> String {
        format!(
            "specs={} runs={} skipped={} errors={}",
            self.specs,
            self.runs,
            self.skipped,
            self.errors.len()
        )
    }
}

/// Scanner with persistent exactly-once state. One instance per
/// (directory, ledger) pair; create it once and call [`scan_once`] per pass.
///
/// [`scan_once`]: DirectoryIngestor::scan_once
pub struct DirectoryIngestor {
    dir: PathBuf,
    ledger_path: PathBuf,
    seen: BTreeSet<String>,
}

impl DirectoryIngestor {
    /// Load prior state from `ledger_path` (absent file = nothing seen yet).
    pub fn new(dir: impl Into<PathBuf>, ledger_path: impl Into<PathBuf>) -> Result<Self> {
        let ledger_path = ledger_path.into();
        let mut seen = BTreeSet::new();
        match fs::read_to_string(&ledger_path) {
            Ok(text) => {
                for line in text.lines() {
                    if let Some((hash, _name)) = line.split_once('\t') {
                        seen.insert(hash.to_string());
                    }
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(Error::io(&ledger_path, e)),
        }
        Ok(DirectoryIngestor { dir: dir.into(), ledger_path, seen })
    }

    /// Process every not-yet-seen spec and log under the directory.
    pub fn scan_once(&mut self, store: &mut GraphStore) -> Result<IngestReport> {
        let mut report = IngestReport::default();
        let mut spec_paths = Vec::new();
        let mut log_paths = Vec::new();

        for entry in walkdir::WalkDir::new(&self.dir).sort_by_file_name() {
            let entry = match entry {
                Ok(entry) => entry,
                Err(e) => {
                    let path = e.path().map(Path::to_path_buf).unwrap_or_else(|| self.dir.clone());
                    report.errors.push((path, e.to_string()));
                    continue;
                }
            };
            if !entry.file_type().is_file() {
                continue;
            }
            match entry.path().extension().and_then(|e| e.to_str()) {
                Some("json") => spec_paths.push(entry.into_path()),
                Some("log") => log_paths.push(entry.into_path()),
                _ => report.skipped += 1,
            }
        }
        spec_paths.sort();
        log_paths.sort();

        let registry = SchemaRegistry::builtin();
        let mut ledger_lines = String::new();
        for (paths, is_spec) in [(spec_paths, true), (log_paths, false)] {
            for path in paths {
                self.process_file(store, &path, is_spec, &registry, &mut report, &mut ledger_lines);
            }
        }

        if !ledger_lines.is_empty() {
            let mut file = fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(&self.ledger_path)
                .map_err(|e| Error::persist(&self.ledger_path, e))?;
            file.write_all(ledger_lines.as_bytes())
                .map_err(|e| Error::persist(&self.ledger_path, e))?;
        }
        Ok(report)
    }

    fn process_file(
        &mut self,
        store: &mut GraphStore,
        path: &Path,
        is_spec: bool,
        registry: &SchemaRegistry,
        report: &mut IngestReport,
        ledger_lines: &mut String,
    ) {
        let text = match fs::read_to_string(path) {
            Ok(text) => text,
            Err(e) => {
                // Unreadable now may be readable next scan; don't mark it.
                report.errors.push((path.to_path_buf(), e.to_string()));
                return;
            }
        };
        let hash = sha256_hex(text.as_bytes());
        if self.seen.contains(&hash) {
            report.skipped += 1;
            return;
        }

        let outcome = if is_spec {
            parse_spec(&text, path)
                .and_then(|spec| ingest_spec(store, &spec).map_err(Error::from))
                .map(|_| &mut report.specs)
        } else {
            parse_run_log(&text, path)
                .and_then(|log| ingest_run(store, &log).map_err(Error::from))
                .map(|instance| {
                    // Best effort: not every workflow has numeric features.
                    let _ = extract_signature(store, &instance, registry, GRAY_SCOTT_SCHEMA);
                    &mut report.runs
                })
        };

        let mark_processed = match outcome {
            Ok(counter) => {
                *counter += 1;
                true
            }
            // A log can precede its spec across scans; leave it for retry.
            Err(Error::Core(ckn_core::Error::UnknownSweep(ref m))) => {
                report.errors.push((path.to_path_buf(), format!("unknown sweep (yet): {m}")));
                false
            }
            Err(e) => {
                report.errors.push((path.to_path_buf(), e.to_string()));
                true
            }
        };
        if mark_processed {
            let shown = path.strip_prefix(&self.dir).unwrap_or(path);
            ledger_lines.push_str(&format!("{hash}\t{}\n", shown.display()));
            self.seen.insert(hash);
        }
    }
}

/// One-shot (post-process) ingestion of a directory.
pub fn ingest_directory(
    store: &mut GraphStore,
    dir: &Path,
    ledger_path: &Path,
) -> Result<IngestReport> {
    DirectoryIngestor::new(dir, ledger_path)?.scan_once(store)
}
