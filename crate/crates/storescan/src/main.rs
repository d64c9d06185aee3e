use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use storescan::{emit_report, load_ruleset, scan_corpus_with, Format, ScanError, ScanOptions};
use storescan_core::{default_ruleset, DetectorConfig, DEFAULT_DEPTH};

/// Finds apps that create private files or folders on shared external storage.
#[derive(Parser, Debug)]
#[command(name = "storescan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scan a corpus directory holding one smali tree per app.
    Scan {
        /// Corpus root; each immediate subdirectory is one app.
        corpus_root: PathBuf,
        /// Call depth explored from each seed method (seed counts as 1).
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
        /// Rules file overriding the built-in vocabularies.
        #[arg(long, value_name = "FILE")]
        rules: Option<PathBuf>,
        #[arg(long, default_value = "json", value_parser = ["json", "text"])]
        format: String,
        /// Write the report here instead of stdout.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
        /// Exit with status 1 when any app is flagged.
        #[arg(long)]
        fail_on_detect: bool,
        /// Print each app's call graph (caller TAB callee) to stderr.
        #[arg(long)]
        dump_callgraph: bool,
    },
}

const EXIT_FLAGGED: u8 = 1;
const EXIT_ERROR: u8 = 2;

#[allow(clippy::too_many_arguments)]
fn scan(
    corpus_root: PathBuf,
    depth: usize,
    rules: Option<PathBuf>,
    format: Format,
    output: Option<PathBuf>,
    fail_on_detect: bool,
    dump_callgraph: bool,
) -> Result<ExitCode, ScanError> {
    let rules = match rules {
        Some(path) => load_ruleset(&path)?,
        None => default_ruleset(),
    };
    let config = DetectorConfig::new(depth, rules)?;
    let scan = scan_corpus_with(&corpus_root, &config, ScanOptions { dump_callgraph })?;

    if dump_callgraph {
        let mut err = io::stderr().lock();
        for (app_id, edges) in &scan.callgraphs {
            let _ = writeln!(err, "# callgraph {app_id}");
            let _ = err.write_all(edges.as_bytes());
        }
    }

    let rendered = emit_report(&scan.report, format);
    match output {
        Some(path) => fs::write(&path, rendered).map_err(|e| ScanError::Io { path, source: e })?,
        None => io::stdout()
            .write_all(rendered.as_bytes())
            .map_err(|e| ScanError::Io {
                path: "<stdout>".into(),
                source: e,
            })?,
    }

    Ok(if fail_on_detect && scan.report.totals.apps_flagged > 0 {
        ExitCode::from(EXIT_FLAGGED)
    } else {
        ExitCode::SUCCESS
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Scan {
        corpus_root,
        depth,
        rules,
        format,
        output,
        fail_on_detect,
        dump_callgraph,
    } = cli.command;
    let format: Format = format.parse().expect("clap restricts the values");
    match scan(
        corpus_root,
        depth,
        rules,
        format,
        output,
        fail_on_detect,
        dump_callgraph,
    ) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("storescan: {err}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
