//! App-internal call graph.
//!
//! Nodes are the methods defined in an app, indexed in lexical identity
//! order. An invoke resolves to an edge only when its target triple matches
//! a defined method exactly; there is no virtual-dispatch or class-hierarchy
//! resolution. Anything else is an external target of the caller.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::smali::{AppModel, MethodId, MethodRef, Op};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("method {0} is not defined in the app")]
    UnknownNode(String),
}

/// A resolved call from one app method to another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub callee: NodeId,
    /// Line of the first invoke in the caller that produced this edge.
    pub line: usize,
}

#[derive(Debug, Clone, Default)]
pub struct CallGraph {
    nodes: Vec<MethodId>,
    index: BTreeMap<MethodId, NodeId>,
    edges: Vec<Vec<Edge>>,
    externals: Vec<Vec<MethodRef>>,
}

/// One node reached by [`CallGraph::bounded_bfs`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reached {
    pub node: NodeId,
    pub distance: usize,
    /// Index into [`BoundedBfs::reached`] of the predecessor on the chosen
    /// chain; `None` for the seed.
    pub parent: Option<usize>,
}

/// Nodes within a hop bound, ordered so that the chain to an earlier entry
/// is never longer, and at equal length never lexically greater, than the
/// chain to a later one.
#[derive(Debug, Clone)]
pub struct BoundedBfs {
    pub reached: Vec<Reached>,
}

impl BoundedBfs {
    /// The chosen call chain from the seed to `reached[index]`, seed first.
    pub fn chain(&self, index: usize) -> Vec<NodeId> {
        let mut chain = Vec::new();
        let mut cursor = Some(index);
        while let Some(i) = cursor {
            chain.push(self.reached[i].node);
            cursor = self.reached[i].parent;
        }
        chain.reverse();
        chain
    }
}

impl CallGraph {
    pub fn build(app: &AppModel) -> CallGraph {
        let mut nodes: Vec<MethodId> = app.methods().map(|m| m.id()).collect();
        nodes.sort();
        nodes.dedup();
        let index: BTreeMap<MethodId, NodeId> = nodes
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), NodeId(i)))
            .collect();

        let mut edges = alloc::vec![Vec::new(); nodes.len()];
        let mut externals = alloc::vec![Vec::new(); nodes.len()];
        for method in app.methods() {
            let caller = index[&method.id()].0;
            let out: &mut Vec<Edge> = &mut edges[caller];
            let ext: &mut Vec<MethodRef> = &mut externals[caller];
            for insn in &method.body {
                let Op::Invoke { target, .. } = &insn.op else {
                    continue;
                };
                match index.get(target) {
                    Some(&callee) => {
                        if !out.iter().any(|e| e.callee == callee) {
                            out.push(Edge {
                                callee,
                                line: insn.source_line,
                            });
                        }
                    }
                    None => {
                        if !ext.contains(target) {
                            ext.push(target.clone());
                        }
                    }
                }
            }
        }

        CallGraph {
            nodes,
            index,
            edges,
            externals,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, method: &MethodId) -> Option<NodeId> {
        self.index.get(method).copied()
    }

    fn require(&self, method: &MethodId) -> Result<NodeId, GraphError> {
        self.node(method)
            .ok_or_else(|| GraphError::UnknownNode(method.to_string()))
    }

    pub fn method(&self, node: NodeId) -> &MethodId {
        &self.nodes[node.0]
    }

    /// All nodes in lexical identity order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId)
    }

    /// Outgoing edges in source order of the first invoke per callee.
    pub fn edges(&self, node: NodeId) -> &[Edge] {
        &self.edges[node.0]
    }

    pub fn callees(&self, node: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.edges[node.0].iter().map(|e| e.callee)
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId) -> bool {
        self.callees(from).any(|c| c == to)
    }

    /// Invoke targets of `node` that are not defined in the app.
    pub fn externals(&self, node: NodeId) -> &[MethodRef] {
        &self.externals[node.0]
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    /// Breadth-first search from `seed` covering every node within `max_hops`
    /// edges. Terminates on cyclic graphs.
    pub fn bounded_bfs(&self, seed: NodeId, max_hops: usize) -> BoundedBfs {
        let mut reached = alloc::vec![Reached {
            node: seed,
            distance: 0,
            parent: None,
        }];
        let mut visited = BTreeSet::new();
        visited.insert(seed);

        let mut layer_start = 0;
        for distance in 1..=max_hops {
            let layer_end = reached.len();
            if layer_start == layer_end {
                break;
            }
            // Parents are scanned in rank order, so the first discovery of a
            // node comes from its best-ranked parent.
            let mut next: Vec<Reached> = Vec::new();
            for (offset, from) in reached[layer_start..layer_end].iter().enumerate() {
                let parent = layer_start + offset;
                for callee in self.callees(from.node) {
                    if visited.insert(callee) {
                        next.push(Reached {
                            node: callee,
                            distance,
                            parent: Some(parent),
                        });
                    }
                }
            }
            next.sort_by_key(|r| (r.parent, r.node));
            reached.extend(next);
            layer_start = layer_end;
        }
        BoundedBfs { reached }
    }

    /// Nodes reachable from `seed` via at most `max_hops` edges, seed included.
    pub fn reachable_within(
        &self,
        seed: &MethodId,
        max_hops: usize,
    ) -> Result<BTreeSet<NodeId>, GraphError> {
        let seed = self.require(seed)?;
        Ok(self
            .bounded_bfs(seed, max_hops)
            .reached
            .iter()
            .map(|r| r.node)
            .collect())
    }

    /// `caller<TAB>callee` lines, lexically sorted, newline-terminated.
    pub fn edge_list(&self) -> String {
        let mut lines: Vec<String> = self
            .nodes()
            .flat_map(|from| {
                self.callees(from)
                    .map(move |to| alloc::format!("{}\t{}", self.method(from), self.method(to)))
            })
            .collect();
        lines.sort();
        let mut out = String::new();
        for line in lines {
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}
