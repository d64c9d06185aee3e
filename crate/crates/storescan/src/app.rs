//! Loading one app's smali tree.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use storescan_core::{parse_class, AppModel};
use walkdir::WalkDir;

use crate::ScanError;

pub const SMALI_EXTENSION: &str = "smali";

/// A parsed app plus the files that could not be parsed.
#[derive(Debug, Clone)]
pub struct ParsedApp {
    pub model: AppModel,
    /// One line per skipped file: `relative/path.smali: message`.
    pub diagnostics: Vec<String>,
}

fn relative_name(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Every `.smali` file under `root`, sorted by relative path.
pub fn smali_files(root: &Path) -> Result<Vec<(String, PathBuf)>, ScanError> {
    let meta = fs::metadata(root).map_err(|e| ScanError::io(root, e))?;
    if !meta.is_dir() {
        return Err(ScanError::NotADirectory(root.into()));
    }
    let mut files = Vec::new();
    for entry in WalkDir::new(root).follow_links(true) {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            ScanError::io(path, e.into())
        })?;
        if entry.file_type().is_file()
            && entry
                .path()
                .extension()
                .is_some_and(|x| x == SMALI_EXTENSION)
        {
            files.push((relative_name(root, entry.path()), entry.into_path()));
        }
    }
    files.sort();
    Ok(files)
}

/// Parses every `.smali` file under `root` (recursively) into one app.
///
/// Files that cannot be read or parsed are skipped and reported in
/// [`ParsedApp::diagnostics`]. Two files declaring the same class is an
/// error for the whole app.
pub fn parse_app_dir(root: &Path, app_id: &str) -> Result<ParsedApp, ScanError> {
    let files = smali_files(root)?;
    let parsed: Vec<Result<_, String>> = files
        .par_iter()
        .map(|(name, path)| {
            let text = fs::read_to_string(path).map_err(|e| format!("{name}: {e}"))?;
            parse_class(&text, name).map_err(|e| format!("{name}: {e}"))
        })
        .collect();

    let mut classes = Vec::new();
    let mut diagnostics = Vec::new();
    for result in parsed {
        match result {
            Ok(class) => classes.push(class),
            Err(message) => diagnostics.push(message),
        }
    }
    Ok(ParsedApp {
        model: AppModel::new(app_id, classes)?,
        diagnostics,
    })
}
