//! Per-seed condition accumulation over the call graph.
//!
//! Every method is tried as a seed. A seed collects the marks of every
//! method within `depth - 1` call edges (the seed itself at distance 0) into
//! a fresh [`ConditionSet`]; the app is flagged when some seed's set covers
//! all three categories. Reachability is computed once per seed with a
//! visited set, so dense or cyclic graphs cost linear work per seed.

use alloc::string::String;
use alloc::vec::Vec;

use crate::callgraph::{BoundedBfs, CallGraph, GraphError, NodeId};
use crate::rules::{
    mark_function, KeywordHit, MarkSet, PathSourceHit, RuleError, RuleSet, WriteSinkHit,
};
use crate::smali::{AppModel, MethodId};

pub const DEFAULT_DEPTH: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error(transparent)]
    Rules(#[from] RuleError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectorConfig {
    depth: usize,
    rules: RuleSet,
}

impl DetectorConfig {
    pub fn new(depth: usize, rules: RuleSet) -> Result<Self, ConfigError> {
        if depth == 0 {
            return Err(ConfigError::ZeroDepth);
        }
        rules.validate()?;
        Ok(DetectorConfig { depth, rules })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            depth: DEFAULT_DEPTH,
            rules: RuleSet::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Keyword,
    PathSource,
    WriteSink,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Keyword, Category::PathSource, Category::WriteSink];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Keyword => "keyword",
            Category::PathSource => "path_source",
            Category::WriteSink => "write_sink",
        }
    }
}

/// Hits of one category found in one method reached from the seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evidence<H> {
    pub method: MethodId,
    /// Call distance from the seed.
    pub distance: usize,
    pub hits: Vec<H>,
}

/// Accumulated marks for one seed. Evidence lists are ordered by distance,
/// then by the lexical order of the call chain leading to the method.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConditionSet {
    pub keyword: Vec<Evidence<KeywordHit>>,
    pub path_source: Vec<Evidence<PathSourceHit>>,
    pub write_sink: Vec<Evidence<WriteSinkHit>>,
}

impl ConditionSet {
    pub fn satisfied(&self) -> bool {
        Category::ALL.iter().all(|c| self.covers(*c))
    }

    pub fn covers(&self, category: Category) -> bool {
        match category {
            Category::Keyword => !self.keyword.is_empty(),
            Category::PathSource => !self.path_source.is_empty(),
            Category::WriteSink => !self.write_sink.is_empty(),
        }
    }
}

/// A call chain from the seed (first) to an evidence method (last).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WitnessChain {
    pub methods: Vec<MethodId>,
    /// `call_lines[i]` is the line in `methods[i]` that invokes
    /// `methods[i + 1]`.
    pub call_lines: Vec<usize>,
}

/// Shortest call chain to the nearest evidence of each category; ties go to
/// the lexically smallest chain.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WitnessChains {
    pub keyword: WitnessChain,
    pub path_source: WitnessChain,
    pub write_sink: WitnessChain,
}

impl WitnessChains {
    pub fn get(&self, category: Category) -> &WitnessChain {
        match category {
            Category::Keyword => &self.keyword,
            Category::PathSource => &self.path_source,
            Category::WriteSink => &self.write_sink,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub seed: MethodId,
    pub conditions: ConditionSet,
    pub witness_chains: WitnessChains,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionResult {
    pub app_id: String,
    pub flagged: bool,
    /// One entry per satisfying seed, in class then method order.
    pub findings: Vec<Finding>,
    pub diagnostics: Vec<String>,
}

/// Marks for every node of `graph`, indexed by [`NodeId`].
pub fn mark_all(app: &AppModel, graph: &CallGraph, rules: &RuleSet) -> Vec<MarkSet> {
    let mut marks = alloc::vec![MarkSet::default(); graph.len()];
    for method in app.methods() {
        if let Some(node) = graph.node(&method.id()) {
            marks[node.0] = mark_function(method, rules);
        }
    }
    marks
}

struct Accumulated {
    conditions: ConditionSet,
    bfs: BoundedBfs,
    /// Index into `bfs.reached` of the first evidence per category.
    first: [Option<usize>; 3],
}

fn accumulate_node(
    graph: &CallGraph,
    marks: &[MarkSet],
    seed: NodeId,
    depth: usize,
) -> Accumulated {
    let mut conditions = ConditionSet::default();
    let mut first = [None; 3];
    if depth == 0 {
        return Accumulated {
            conditions,
            bfs: BoundedBfs {
                reached: Vec::new(),
            },
            first,
        };
    }
    let bfs = graph.bounded_bfs(seed, depth - 1);
    for (index, reached) in bfs.reached.iter().enumerate() {
        let mark = &marks[reached.node.0];
        if mark.is_empty() {
            continue;
        }
        let method = graph.method(reached.node);
        push_evidence(
            &mut conditions.keyword,
            &mut first[0],
            index,
            method,
            reached.distance,
            &mark.keyword_hits,
        );
        push_evidence(
            &mut conditions.path_source,
            &mut first[1],
            index,
            method,
            reached.distance,
            &mark.path_source_hits,
        );
        push_evidence(
            &mut conditions.write_sink,
            &mut first[2],
            index,
            method,
            reached.distance,
            &mark.write_sink_hits,
        );
    }
    Accumulated {
        conditions,
        bfs,
        first,
    }
}

fn push_evidence<H: Clone>(
    list: &mut Vec<Evidence<H>>,
    first: &mut Option<usize>,
    index: usize,
    method: &MethodId,
    distance: usize,
    hits: &[H],
) {
    if hits.is_empty() {
        return;
    }
    first.get_or_insert(index);
    list.push(Evidence {
        method: method.clone(),
        distance,
        hits: hits.to_vec(),
    });
}

/// Union of the marks of every method within `depth - 1` call edges of
/// `seed`. `marks` is indexed by [`NodeId`]. A depth of 0 yields an empty
/// set.
pub fn accumulate(
    seed: &MethodId,
    graph: &CallGraph,
    marks: &[MarkSet],
    depth: usize,
) -> Result<ConditionSet, GraphError> {
    let node = graph
        .node(seed)
        .ok_or_else(|| GraphError::UnknownNode(alloc::format!("{seed}")))?;
    Ok(accumulate_node(graph, marks, node, depth).conditions)
}

fn finding_for(
    graph: &CallGraph,
    marks: &[MarkSet],
    seed: NodeId,
    depth: usize,
) -> Option<Finding> {
    let acc = accumulate_node(graph, marks, seed, depth);
    if !acc.conditions.satisfied() {
        return None;
    }
    let chain = |slot: Option<usize>| -> WitnessChain {
        let Some(index) = slot else {
            return WitnessChain::default();
        };
        let nodes = acc.bfs.chain(index);
        let call_lines = nodes
            .windows(2)
            .map(|hop| {
                graph
                    .edges(hop[0])
                    .iter()
                    .find(|e| e.callee == hop[1])
                    .map(|e| e.line)
                    .expect("chain hops are graph edges")
            })
            .collect();
        WitnessChain {
            methods: nodes.iter().map(|n| graph.method(*n).clone()).collect(),
            call_lines,
        }
    };
    let witness_chains = WitnessChains {
        keyword: chain(acc.first[0]),
        path_source: chain(acc.first[1]),
        write_sink: chain(acc.first[2]),
    };
    Some(Finding {
        seed: graph.method(seed).clone(),
        conditions: acc.conditions,
        witness_chains,
    })
}

/// The seeds, in the given order, whose condition set is satisfied.
pub fn satisfying_seeds<'a>(
    graph: &'a CallGraph,
    marks: &'a [MarkSet],
    depth: usize,
    seeds: impl IntoIterator<Item = NodeId> + 'a,
) -> impl Iterator<Item = NodeId> + 'a {
    seeds.into_iter().filter(move |&seed| {
        accumulate_node(graph, marks, seed, depth)
            .conditions
            .satisfied()
    })
}

/// Runs detection over every method of `app` as a seed.
///
/// All satisfying seeds are reported; `flagged` is true iff there is at
/// least one. Diagnostics are left empty for the caller to fill.
pub fn detect_app(app: &AppModel, config: &DetectorConfig) -> DetectionResult {
    let graph = CallGraph::build(app);
    let marks = mark_all(app, &graph, &config.rules);
    let findings: Vec<Finding> = app
        .methods()
        .filter_map(|m| graph.node(&m.id()))
        .filter_map(|seed| finding_for(&graph, &marks, seed, config.depth))
        .collect();
    DetectionResult {
        app_id: app.app_id.clone(),
        flagged: !findings.is_empty(),
        findings,
        diagnostics: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::default_ruleset;
    use crate::smali::{parse_class, parse_method_ref};
    use alloc::vec;

    fn app(text: &str) -> AppModel {
        AppModel::new("app", vec![parse_class(text, "A.smali").unwrap()]).unwrap()
    }

    fn id(s: &str) -> MethodId {
        parse_method_ref(s).unwrap()
    }

    const ENV: &str = "    invoke-static {}, Landroid/os/Environment;->getExternalStorageDirectory()Ljava/io/File;";
    const FOS: &str =
        "    invoke-direct {v0, v1}, Ljava/io/FileOutputStream;-><init>(Ljava/lang/String;)V";

    fn chain_app() -> AppModel {
        app(&alloc::format!(
            ".class La/A;\n.super Ljava/lang/Object;\n\
.method main()V\n{ENV}\n    invoke-static {{}}, La/A;->helper()V\n.end method\n\
.method helper()V\n    const-string v0, \"/cache/\"\n    invoke-static {{}}, La/A;->writer()V\n.end method\n\
.method writer()V\n{FOS}\n.end method\n"
        ))
    }

    fn conditions(app: &AppModel, seed: &str, depth: usize) -> ConditionSet {
        let graph = CallGraph::build(app);
        let marks = mark_all(app, &graph, &default_ruleset());
        accumulate(&id(seed), &graph, &marks, depth).unwrap()
    }

    #[test]
    fn single_method_depth_one() {
        let a = app(&alloc::format!(
            ".class La/A;\n.method f()V\n{ENV}\n    const-string v0, \"app.log\"\n{FOS}\n.end method\n"
        ));
        let c = conditions(&a, "La/A;->f()V", 1);
        assert!(c.satisfied());
        assert!(c.keyword.iter().all(|e| e.distance == 0));
    }

    #[test]
    fn chain_satisfied_at_depth_three() {
        let c = conditions(&chain_app(), "La/A;->main()V", 3);
        assert!(c.satisfied());
        assert_eq!(c.path_source[0].distance, 0);
        assert_eq!(c.keyword[0].distance, 1);
        assert_eq!(c.write_sink[0].distance, 2);
    }

    #[test]
    fn chain_not_satisfied_at_depth_two() {
        let c = conditions(&chain_app(), "La/A;->main()V", 2);
        assert!(!c.satisfied());
        assert!(c.write_sink.is_empty());
    }

    #[test]
    fn depth_zero_is_empty() {
        assert_eq!(
            conditions(&chain_app(), "La/A;->main()V", 0),
            ConditionSet::default()
        );
    }

    #[test]
    fn cycle_terminates() {
        let a = app(&alloc::format!(
            ".class La/A;\n\
.method f()V\n{ENV}\n    const-string v0, \"/x/files/\"\n    invoke-static {{}}, La/A;->g()V\n.end method\n\
.method g()V\n    invoke-virtual {{v0}}, Ljava/io/File;->mkdirs()Z\n    invoke-static {{}}, La/A;->f()V\n.end method\n"
        ));
        assert!(conditions(&a, "La/A;->f()V", 3).satisfied());
        assert!(conditions(&a, "La/A;->g()V", 3).satisfied());
        assert!(!conditions(&a, "La/A;->g()V", 1).satisfied());
    }

    #[test]
    fn unknown_seed_is_an_error() {
        let a = chain_app();
        let graph = CallGraph::build(&a);
        let marks = mark_all(&a, &graph, &default_ruleset());
        assert!(accumulate(&id("La/A;->nope()V"), &graph, &marks, 3).is_err());
    }

    #[test]
    fn empty_app_is_not_flagged() {
        let r = detect_app(
            &AppModel::new("empty", vec![]).unwrap(),
            &DetectorConfig::default(),
        );
        assert!(!r.flagged);
        assert!(r.findings.is_empty());
        assert_eq!(r.app_id, "empty");
    }

    #[test]
    fn chain_app_has_one_finding_with_chains() {
        let r = detect_app(&chain_app(), &DetectorConfig::default());
        assert!(r.flagged);
        assert_eq!(r.findings.len(), 1);
        let f = &r.findings[0];
        assert_eq!(f.seed, id("La/A;->main()V"));
        let names = |c: &WitnessChain| c.methods.iter().map(|m| m.name.clone()).collect::<Vec<_>>();
        assert_eq!(names(&f.witness_chains.path_source), vec!["main"]);
        assert_eq!(names(&f.witness_chains.keyword), vec!["main", "helper"]);
        assert_eq!(
            names(&f.witness_chains.write_sink),
            vec!["main", "helper", "writer"]
        );
        assert_eq!(f.witness_chains.write_sink.call_lines, vec![5, 9]);
        assert!(f.witness_chains.path_source.call_lines.is_empty());
    }

    #[test]
    fn unreachable_categories_do_not_combine() {
        let a = app(&alloc::format!(
            ".class La/A;\n\
.method k()V\n    const-string v0, \"/tmp/\"\n{ENV}\n.end method\n\
.method w()V\n{FOS}\n.end method\n"
        ));
        assert!(!detect_app(&a, &DetectorConfig::new(4, default_ruleset()).unwrap()).flagged);
    }

    #[test]
    fn config_rejects_zero_depth() {
        assert_eq!(
            DetectorConfig::new(0, default_ruleset()),
            Err(ConfigError::ZeroDepth)
        );
        assert_eq!(DetectorConfig::default().depth(), 3);
    }
}
