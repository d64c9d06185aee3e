//! JSON and text rendering of a [`CorpusReport`].
//!
//! The JSON layout is described by `schema/report.schema.json`. Keys are
//! emitted in a fixed order and apps are sorted by id, so identical inputs
//! give byte-identical output.

use std::fmt::Write;
use std::str::FromStr;

use serde::Serialize;
use storescan_core::{Category, DetectionResult, Finding, PathEvidence, WitnessChain};

use crate::corpus::CorpusReport;

pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Text,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "text" => Ok(Format::Text),
            other => Err(format!("unknown format {other:?} (expected json or text)")),
        }
    }
}

#[derive(Serialize)]
struct JsonReport<'a> {
    schema_version: &'a str,
    config: JsonConfig<'a>,
    totals: JsonTotals,
    apps: Vec<JsonApp<'a>>,
}

#[derive(Serialize)]
struct JsonConfig<'a> {
    depth: usize,
    rules_digest: &'a str,
}

#[derive(Serialize)]
struct JsonTotals {
    apps_scanned: usize,
    apps_flagged: usize,
    parse_diagnostics: usize,
}

#[derive(Serialize)]
struct JsonApp<'a> {
    app_id: &'a str,
    flagged: bool,
    diagnostics: &'a [String],
    findings: Vec<JsonFinding>,
}

#[derive(Serialize)]
struct JsonFinding {
    seed: String,
    categories: JsonCategories,
    witness_chains: JsonChains,
}

#[derive(Serialize)]
struct JsonCategories {
    keyword: Vec<KeywordRow>,
    path_source: Vec<PathSourceRow>,
    write_sink: Vec<WriteSinkRow>,
}

#[derive(Serialize)]
struct KeywordRow {
    value: String,
    keyword: String,
    method: String,
    line: usize,
    distance: usize,
}

#[derive(Serialize)]
struct PathSourceRow {
    kind: &'static str,
    value: String,
    /// Full target for API hits, matched prefix for hardcoded paths.
    detail: String,
    method: String,
    line: usize,
    distance: usize,
}

#[derive(Serialize)]
struct WriteSinkRow {
    value: String,
    method: String,
    line: usize,
    distance: usize,
}

#[derive(Serialize)]
struct JsonChains {
    keyword: Vec<ChainLink>,
    path_source: Vec<ChainLink>,
    write_sink: Vec<ChainLink>,
}

/// One method on a witness chain; `call_line` is the line in the previous
/// method that invokes it (null for the seed).
#[derive(Serialize)]
struct ChainLink {
    method: String,
    call_line: Option<usize>,
}

fn chain_links(chain: &WitnessChain) -> Vec<ChainLink> {
    chain
        .methods
        .iter()
        .enumerate()
        .map(|(i, m)| ChainLink {
            method: m.to_string(),
            call_line: i.checked_sub(1).map(|prev| chain.call_lines[prev]),
        })
        .collect()
}

fn json_finding(finding: &Finding) -> JsonFinding {
    let c = &finding.conditions;
    let keyword = c
        .keyword
        .iter()
        .flat_map(|e| {
            e.hits.iter().map(|h| KeywordRow {
                value: h.value.clone(),
                keyword: h.keyword.clone(),
                method: e.method.to_string(),
                line: h.line,
                distance: e.distance,
            })
        })
        .collect();
    let path_source = c
        .path_source
        .iter()
        .flat_map(|e| {
            e.hits.iter().map(|h| {
                let (kind, detail) = match &h.evidence {
                    PathEvidence::Api(target) => ("api", target.to_string()),
                    PathEvidence::HardcodedPath { prefix, .. } => {
                        ("hardcoded_path", prefix.clone())
                    }
                };
                PathSourceRow {
                    kind,
                    value: h.evidence.text().to_string(),
                    detail,
                    method: e.method.to_string(),
                    line: h.line,
                    distance: e.distance,
                }
            })
        })
        .collect();
    let write_sink = c
        .write_sink
        .iter()
        .flat_map(|e| {
            e.hits.iter().map(|h| WriteSinkRow {
                value: h.target.to_string(),
                method: e.method.to_string(),
                line: h.line,
                distance: e.distance,
            })
        })
        .collect();
    let w = &finding.witness_chains;
    JsonFinding {
        seed: finding.seed.to_string(),
        categories: JsonCategories {
            keyword,
            path_source,
            write_sink,
        },
        witness_chains: JsonChains {
            keyword: chain_links(&w.keyword),
            path_source: chain_links(&w.path_source),
            write_sink: chain_links(&w.write_sink),
        },
    }
}

fn json_app(app: &DetectionResult) -> JsonApp<'_> {
    JsonApp {
        app_id: &app.app_id,
        flagged: app.flagged,
        diagnostics: &app.diagnostics,
        findings: app.findings.iter().map(json_finding).collect(),
    }
}

pub fn to_json(report: &CorpusReport) -> String {
    let view = JsonReport {
        schema_version: &report.schema_version,
        config: JsonConfig {
            depth: report.depth,
            rules_digest: &report.rules_digest,
        },
        totals: JsonTotals {
            apps_scanned: report.totals.apps_scanned,
            apps_flagged: report.totals.apps_flagged,
            parse_diagnostics: report.totals.parse_diagnostics,
        },
        apps: report.apps.iter().map(json_app).collect(),
    };
    let mut out = serde_json::to_string_pretty(&view).expect("report serializes");
    out.push('\n');
    out
}

fn write_chain(out: &mut String, category: Category, chain: &WitnessChain) {
    let _ = write!(out, "    chain {}: ", category.as_str());
    for (i, method) in chain.methods.iter().enumerate() {
        if i > 0 {
            let _ = write!(out, " -[line {}]-> ", chain.call_lines[i - 1]);
        }
        let _ = write!(out, "{method}");
    }
    out.push('\n');
}

/// Summary line, then one block per flagged app listing each satisfying
/// seed, its evidence and its witness chains.
pub fn to_text(report: &CorpusReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "scanned={} flagged={}",
        report.totals.apps_scanned, report.totals.apps_flagged
    );
    for app in report.apps.iter().filter(|a| a.flagged) {
        let _ = writeln!(out, "\napp {}", app.app_id);
        for finding in &app.findings {
            let _ = writeln!(out, "  seed {}", finding.seed);
            let c = &finding.conditions;
            for e in &c.keyword {
                for h in &e.hits {
                    let _ = writeln!(
                        out,
                        "    keyword {:?} [{}] at {}:{} (distance {})",
                        h.value, h.keyword, e.method, h.line, e.distance
                    );
                }
            }
            for e in &c.path_source {
                for h in &e.hits {
                    let _ = writeln!(
                        out,
                        "    path_source {} at {}:{} (distance {})",
                        match &h.evidence {
                            PathEvidence::Api(t) => t.to_string(),
                            PathEvidence::HardcodedPath { literal, .. } => format!("{literal:?}"),
                        },
                        e.method,
                        h.line,
                        e.distance
                    );
                }
            }
            for e in &c.write_sink {
                for h in &e.hits {
                    let _ = writeln!(
                        out,
                        "    write_sink {} at {}:{} (distance {})",
                        h.target, e.method, h.line, e.distance
                    );
                }
            }
            for category in Category::ALL {
                write_chain(&mut out, category, finding.witness_chains.get(category));
            }
        }
    }
    out
}

pub fn emit_report(report: &CorpusReport, format: Format) -> String {
    match format {
        Format::Json => to_json(report),
        Format::Text => to_text(report),
    }
}
