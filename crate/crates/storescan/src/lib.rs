//! Filesystem, rule-file and reporting layer over [`storescan_core`].
//!
//! A corpus is a directory with one subdirectory per app, each holding that
//! app's disassembled `.smali` files. [`scan_corpus`] parses and analyses
//! every app and returns a [`CorpusReport`], which [`emit_report`] renders as
//! JSON or text.

pub mod app;
pub mod corpus;
mod error;
pub mod report;
pub mod rules_file;

pub use app::{parse_app_dir, ParsedApp};
pub use corpus::{scan_corpus, scan_corpus_with, CorpusReport, CorpusScan, ScanOptions, Totals};
pub use error::ScanError;
pub use report::{emit_report, Format, REPORT_SCHEMA};
pub use rules_file::{load_ruleset, rules_digest};
