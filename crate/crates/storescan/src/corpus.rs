//! Corpus scanning: one immediate subdirectory per app.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use storescan_core::{detect_app, CallGraph, DetectionResult, DetectorConfig};

use crate::app::parse_app_dir;
use crate::rules_file::rules_digest;
use crate::ScanError;

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Totals {
    pub apps_scanned: usize,
    pub apps_flagged: usize,
    pub parse_diagnostics: usize,
}

impl Totals {
    pub fn from_apps(apps: &[DetectionResult]) -> Totals {
        Totals {
            apps_scanned: apps.len(),
            apps_flagged: apps.iter().filter(|a| a.flagged).count(),
            parse_diagnostics: apps.iter().map(|a| a.diagnostics.len()).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusReport {
    pub schema_version: String,
    pub depth: usize,
    pub rules_digest: String,
    /// Sorted by `app_id`.
    pub apps: Vec<DetectionResult>,
    pub totals: Totals,
}

impl CorpusReport {
    pub fn new(config: &DetectorConfig, mut apps: Vec<DetectionResult>) -> CorpusReport {
        apps.sort_by(|a, b| a.app_id.cmp(&b.app_id));
        let totals = Totals::from_apps(&apps);
        CorpusReport {
            schema_version: SCHEMA_VERSION.into(),
            depth: config.depth(),
            rules_digest: rules_digest(config.rules()),
            apps,
            totals,
        }
    }

    pub fn totals_consistent(&self) -> bool {
        self.totals == Totals::from_apps(&self.apps)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ScanOptions {
    /// Also produce each app's call graph as a sorted edge list.
    pub dump_callgraph: bool,
}

#[derive(Debug, Clone)]
pub struct CorpusScan {
    pub report: CorpusReport,
    /// `(app_id, edge list)` in app order, when requested.
    pub callgraphs: Vec<(String, String)>,
}

/// Immediate subdirectories of `root`, sorted by name.
pub fn app_dirs(root: &Path) -> Result<Vec<(String, PathBuf)>, ScanError> {
    let entries = fs::read_dir(root).map_err(|e| ScanError::io(root, e))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| ScanError::io(root, e))?;
        let path = entry.path();
        if path.is_dir() {
            dirs.push((entry.file_name().to_string_lossy().into_owned(), path));
        }
    }
    dirs.sort();
    Ok(dirs)
}

/// Parses and runs detection on one app directory. Failures that prevent
/// building the app become diagnostics on an unflagged result.
pub fn scan_app(
    dir: &Path,
    app_id: &str,
    config: &DetectorConfig,
    dump_callgraph: bool,
) -> (DetectionResult, Option<String>) {
    match parse_app_dir(dir, app_id) {
        Ok(parsed) => {
            let mut result = detect_app(&parsed.model, config);
            result.diagnostics = parsed.diagnostics;
            let graph = dump_callgraph.then(|| CallGraph::build(&parsed.model).edge_list());
            (result, graph)
        }
        Err(err) => (
            DetectionResult {
                app_id: app_id.into(),
                flagged: false,
                findings: Vec::new(),
                diagnostics: vec![err.to_string()],
            },
            None,
        ),
    }
}

pub fn scan_corpus(root: &Path, config: &DetectorConfig) -> Result<CorpusReport, ScanError> {
    scan_corpus_with(root, config, ScanOptions::default()).map(|scan| scan.report)
}

/// Scans every app under `root` in parallel; results are merged in app_id
/// order.
pub fn scan_corpus_with(
    root: &Path,
    config: &DetectorConfig,
    options: ScanOptions,
) -> Result<CorpusScan, ScanError> {
    let dirs = app_dirs(root)?;
    let scanned: Vec<(DetectionResult, Option<String>)> = dirs
        .par_iter()
        .map(|(app_id, dir)| scan_app(dir, app_id, config, options.dump_callgraph))
        .collect();

    let mut apps = Vec::with_capacity(scanned.len());
    let mut callgraphs = Vec::new();
    for (result, graph) in scanned {
        if let Some(edges) = graph {
            callgraphs.push((result.app_id.clone(), edges));
        }
        apps.push(result);
    }
    Ok(CorpusScan {
        report: CorpusReport::new(config, apps),
        callgraphs,
    })
}
