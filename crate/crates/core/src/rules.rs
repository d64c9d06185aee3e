//! Marking vocabularies and per-method marking.
//!
//! A method is marked in three independent categories:
//!
//! * keyword: a string constant that looks like a path and contains one of
//!   the keywords as a whole token (`/user_log`, `user.log`);
//! * path source: a call to one of the shared-storage path APIs, or a string
//!   constant starting with a hardcoded SD card path;
//! * write sink: a `FileOutputStream` constructor or a `mkdir`/`mkdirs` call.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::smali::{is_object_descriptor, MethodDef, MethodRef, Op};

pub const DEFAULT_KEYWORDS: [&str; 11] = [
    "log", "cache", "files", "file", "data", "temp", "tmp", "account", "meta", "uid", "history",
];

pub const DEFAULT_PATH_APIS: [&str; 6] = [
    "getExternalStorageDirectory",
    "getExternalStoragePublicDirectory",
    "getExternalFilesDir",
    "getExternalFilesDirs",
    "getExternalCacheDir",
    "getExternalCacheDirs",
];

pub const DEFAULT_HARDCODED_PATHS: [&str; 3] = ["/sdcard", "/sdcard0", "/sdcard1"];

pub const DEFAULT_WRITE_SINKS: [(&str, &str); 3] = [
    ("Ljava/io/FileOutputStream;", "<init>"),
    ("Ljava/io/File;", "mkdir"),
    ("Ljava/io/File;", "mkdirs"),
];

/// Characters that separate tokens in a path-like string.
const TOKEN_DELIMITERS: [char; 6] = ['/', '\\', '.', '_', '-', ' '];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WriteSink {
    pub class_descriptor: String,
    pub method_name: String,
}

impl WriteSink {
    pub fn new(class_descriptor: impl Into<String>, method_name: impl Into<String>) -> Self {
        WriteSink {
            class_descriptor: class_descriptor.into(),
            method_name: method_name.into(),
        }
    }

    pub fn matches(&self, target: &MethodRef) -> bool {
        self.class_descriptor == target.class_descriptor && self.method_name == target.name
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("invalid ruleset: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    pub keywords: Vec<String>,
    pub path_api_names: Vec<String>,
    pub hardcoded_path_prefixes: Vec<String>,
    pub write_sinks: Vec<WriteSink>,
}

impl Default for RuleSet {
    fn default() -> Self {
        default_ruleset()
    }
}

pub fn default_ruleset() -> RuleSet {
    RuleSet {
        keywords: DEFAULT_KEYWORDS.iter().map(|s| s.to_string()).collect(),
        path_api_names: DEFAULT_PATH_APIS.iter().map(|s| s.to_string()).collect(),
        hardcoded_path_prefixes: DEFAULT_HARDCODED_PATHS
            .iter()
            .map(|s| s.to_string())
            .collect(),
        write_sinks: DEFAULT_WRITE_SINKS
            .iter()
            .map(|(c, m)| WriteSink::new(*c, *m))
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Keywords,
    PathApis,
    HardcodedPaths,
    WriteSinks,
}

impl Section {
    fn from_header(name: &str) -> Option<Self> {
        Some(match name {
            "keywords" => Section::Keywords,
            "path_apis" => Section::PathApis,
            "hardcoded_paths" => Section::HardcodedPaths,
            "write_sinks" => Section::WriteSinks,
            _ => return None,
        })
    }
}

fn check_entry(section: Section, entry: &str) -> Result<(), String> {
    match section {
        Section::Keywords => {
            if entry.is_empty() {
                return Err("empty keyword".into());
            }
            if entry != entry.to_lowercase() {
                return Err(alloc::format!("keyword {entry:?} is not lowercase"));
            }
        }
        Section::PathApis if entry.is_empty() => return Err("empty path API name".into()),
        Section::HardcodedPaths if entry.is_empty() => return Err("empty hardcoded path".into()),
        _ => {}
    }
    Ok(())
}

fn check_sink(sink: &WriteSink) -> Result<(), String> {
    if !is_object_descriptor(&sink.class_descriptor) {
        return Err(alloc::format!(
            "write sink class {:?} is not an object descriptor",
            sink.class_descriptor
        ));
    }
    if sink.method_name.is_empty() {
        return Err("write sink without a method name".into());
    }
    Ok(())
}

fn first_duplicate<T: PartialEq>(items: &[T]) -> Option<&T> {
    items
        .iter()
        .enumerate()
        .find(|(i, item)| items[..*i].contains(item))
        .map(|(_, item)| item)
}

impl RuleSet {
    /// Checks the invariants: entries non-empty, keywords lowercase, no
    /// duplicates within a list.
    pub fn validate(&self) -> Result<(), RuleError> {
        let lists = [
            (Section::Keywords, &self.keywords),
            (Section::PathApis, &self.path_api_names),
            (Section::HardcodedPaths, &self.hardcoded_path_prefixes),
        ];
        for (section, list) in lists {
            for entry in list {
                check_entry(section, entry).map_err(RuleError::Invalid)?;
            }
            if let Some(dup) = first_duplicate(list) {
                return Err(RuleError::Invalid(alloc::format!(
                    "duplicate entry {dup:?}"
                )));
            }
        }
        for sink in &self.write_sinks {
            check_sink(sink).map_err(RuleError::Invalid)?;
        }
        if let Some(dup) = first_duplicate(&self.write_sinks) {
            return Err(RuleError::Invalid(alloc::format!(
                "duplicate write sink {}::{}",
                dup.class_descriptor,
                dup.method_name
            )));
        }
        Ok(())
    }

    /// Parses the sectioned rules format. Sections that do not appear keep
    /// their default entries; a section header with no entries yields an
    /// empty list.
    ///
    /// ```text
    /// # comment
    /// [keywords]
    /// log
    /// [write_sinks]
    /// Ljava/io/FileOutputStream;::<init>
    /// ```
    pub fn parse(text: &str) -> Result<RuleSet, RuleError> {
        let mut rules = default_ruleset();
        let mut seen: Vec<Section> = Vec::new();
        let mut current: Option<Section> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let entry = raw.trim();
            let fail = |message: String| RuleError::Format { line, message };
            if entry.is_empty() || entry.starts_with('#') {
                continue;
            }
            if let Some(name) = entry.strip_prefix('[').and_then(|e| e.strip_suffix(']')) {
                let section = Section::from_header(name.trim())
                    .ok_or_else(|| fail(alloc::format!("unknown section [{name}]")))?;
                if seen.contains(&section) {
                    return Err(fail(alloc::format!("section [{name}] appears twice")));
                }
                seen.push(section);
                match section {
                    Section::Keywords => rules.keywords.clear(),
                    Section::PathApis => rules.path_api_names.clear(),
                    Section::HardcodedPaths => rules.hardcoded_path_prefixes.clear(),
                    Section::WriteSinks => rules.write_sinks.clear(),
                }
                current = Some(section);
                continue;
            }
            let section = current.ok_or_else(|| fail("entry outside any section".into()))?;
            if section == Section::WriteSinks {
                let (class, name) = entry.split_once("::").ok_or_else(|| {
                    fail(alloc::format!("write sink {entry:?} is not Lclass;::name"))
                })?;
                let sink = WriteSink::new(class.trim(), name.trim());
                check_sink(&sink).map_err(fail)?;
                if rules.write_sinks.contains(&sink) {
                    return Err(fail(alloc::format!("duplicate write sink {entry:?}")));
                }
                rules.write_sinks.push(sink);
                continue;
            }
            check_entry(section, entry).map_err(fail)?;
            let list = match section {
                Section::Keywords => &mut rules.keywords,
                Section::PathApis => &mut rules.path_api_names,
                Section::HardcodedPaths => &mut rules.hardcoded_path_prefixes,
                Section::WriteSinks => unreachable!(),
            };
            if list.iter().any(|e| e == entry) {
                return Err(fail(alloc::format!("duplicate entry {entry:?}")));
            }
            list.push(entry.into());
        }
        Ok(rules)
    }

    /// Canonical text form; [`RuleSet::parse`] reads it back unchanged.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("[keywords]\n");
        for k in &self.keywords {
            let _ = writeln!(out, "{k}");
        }
        out.push_str("[path_apis]\n");
        for a in &self.path_api_names {
            let _ = writeln!(out, "{a}");
        }
        out.push_str("[hardcoded_paths]\n");
        for p in &self.hardcoded_path_prefixes {
            let _ = writeln!(out, "{p}");
        }
        out.push_str("[write_sinks]\n");
        for s in &self.write_sinks {
            let _ = writeln!(out, "{}::{}", s.class_descriptor, s.method_name);
        }
        out
    }

    fn hardcoded_prefix_of(&self, value: &str) -> Option<&str> {
        self.hardcoded_path_prefixes
            .iter()
            .find(|p| {
                value
                    .strip_prefix(p.as_str())
                    .is_some_and(|rest| rest.is_empty() || rest.starts_with('/'))
            })
            .map(String::as_str)
    }
}

/// Whole-token keyword matching over path-like strings.
///
/// Only strings containing `/` or `.` are considered. They are split on
/// `/ \ . _ -` and space; a keyword matches when it equals a token, ignoring
/// case. Matches are returned once each, in keyword-list order.
pub fn match_keyword<'k>(s: &str, keywords: &'k [String]) -> Vec<&'k str> {
    if !s.contains(['/', '.']) {
        return Vec::new();
    }
    let tokens: Vec<String> = s
        .split(TOKEN_DELIMITERS)
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect();
    let mut hits: Vec<&str> = Vec::new();
    for keyword in keywords {
        if !hits.contains(&keyword.as_str()) && tokens.iter().any(|t| t == keyword) {
            hits.push(keyword);
        }
    }
    hits
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordHit {
    pub value: String,
    pub keyword: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathEvidence {
    /// A call to one of the path APIs.
    Api(MethodRef),
    /// A string constant starting with a hardcoded storage path.
    HardcodedPath { literal: String, prefix: String },
}

impl PathEvidence {
    /// The API name or the string literal.
    pub fn text(&self) -> &str {
        match self {
            PathEvidence::Api(target) => &target.name,
            PathEvidence::HardcodedPath { literal, .. } => literal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSourceHit {
    pub evidence: PathEvidence,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WriteSinkHit {
    pub target: MethodRef,
    pub line: usize,
}

/// Per-method marks, one list per category.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MarkSet {
    pub keyword_hits: Vec<KeywordHit>,
    pub path_source_hits: Vec<PathSourceHit>,
    pub write_sink_hits: Vec<WriteSinkHit>,
}

impl MarkSet {
    pub fn has_keyword(&self) -> bool {
        !self.keyword_hits.is_empty()
    }

    pub fn has_path_source(&self) -> bool {
        !self.path_source_hits.is_empty()
    }

    pub fn has_write_sink(&self) -> bool {
        !self.write_sink_hits.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        !(self.has_keyword() || self.has_path_source() || self.has_write_sink())
    }
}

pub fn mark_function(method: &MethodDef, rules: &RuleSet) -> MarkSet {
    let mut marks = MarkSet::default();
    for insn in &method.body {
        let line = insn.source_line;
        match &insn.op {
            Op::Invoke { target, .. } => {
                if rules.path_api_names.contains(&target.name) {
                    marks.path_source_hits.push(PathSourceHit {
                        evidence: PathEvidence::Api(target.clone()),
                        line,
                    });
                }
                if rules.write_sinks.iter().any(|s| s.matches(target)) {
                    marks.write_sink_hits.push(WriteSinkHit {
                        target: target.clone(),
                        line,
                    });
                }
            }
            Op::StringConst { value, .. } => {
                if let Some(prefix) = rules.hardcoded_prefix_of(value) {
                    marks.path_source_hits.push(PathSourceHit {
                        evidence: PathEvidence::HardcodedPath {
                            literal: value.clone(),
                            prefix: prefix.into(),
                        },
                        line,
                    });
                }
                for keyword in match_keyword(value, &rules.keywords) {
                    marks.keyword_hits.push(KeywordHit {
                        value: value.clone(),
                        keyword: keyword.into(),
                        line,
                    });
                }
            }
            Op::NewInstance { .. } | Op::Opaque(_) => {}
        }
    }
    marks
}
