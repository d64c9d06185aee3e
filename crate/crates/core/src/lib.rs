//! Detection of app-private files and directories created on shared public
//! storage, computed over smali disassembly.
//!
//! The crate is `no_std` (it needs `alloc`) and does no IO. It has four layers:
//!
//! * [`smali`]: a line-oriented smali parser producing a small IR in which
//!   only invokes, string constants and `new-instance` are interpreted.
//! * [`callgraph`]: app-internal call graph with exact-signature resolution.
//! * [`rules`]: the keyword, path-source and write-sink vocabularies and
//!   per-method marking.
//! * [`detector`]: depth-bounded condition accumulation per seed method.
//!
//! Filesystem traversal, rule files, reporting and the CLI live in the
//! `storescan` crate.

#![no_std]

extern crate alloc;

pub mod callgraph;
pub mod detector;
pub mod rules;
pub mod smali;

pub use callgraph::{CallGraph, GraphError, NodeId};
pub use detector::{
    accumulate, detect_app, mark_all, satisfying_seeds, Category, ConditionSet, ConfigError,
    DetectionResult, DetectorConfig, Evidence, Finding, WitnessChain, WitnessChains, DEFAULT_DEPTH,
};
pub use rules::{
    default_ruleset, mark_function, match_keyword, KeywordHit, MarkSet, PathEvidence,
    PathSourceHit, RuleError, RuleSet, WriteSink, WriteSinkHit,
};
pub use smali::{
    parse_class, render_class, AppModel, ClassDef, Instruction, InvokeKind, MethodDef, MethodId,
    MethodRef, Op, ParseError,
};
