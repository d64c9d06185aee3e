//! Planted corpus: apps whose verdict at depth 3 is known by construction.
//!
//! Each app is built from a small "structure" carrying the marks, plus
//! unmarked noise methods. Noise is only ever called from the structure or
//! from other noise, never calls back into it, so it cannot change which
//! marks a seed reaches. Method indices are shuffled before rendering.

#![allow(dead_code)]

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::common::{oracle_flagged, Instance, KEYWORD, PATH, SINK};

pub const PLANT_DEPTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CleanKind {
    MissingCategory,
    BeyondDepth,
    Disconnected,
}

#[derive(Debug, Clone)]
pub struct PlantedApp {
    pub app_id: String,
    pub vulnerable: bool,
    pub instance: Instance,
}

struct Builder {
    edges: Vec<Vec<usize>>,
    marks: Vec<[bool; 3]>,
}

impl Builder {
    fn new() -> Builder {
        Builder {
            edges: Vec::new(),
            marks: Vec::new(),
        }
    }

    fn node(&mut self) -> usize {
        self.edges.push(Vec::new());
        self.marks.push([false; 3]);
        self.edges.len() - 1
    }

    fn edge(&mut self, from: usize, to: usize) {
        if !self.edges[from].contains(&to) {
            self.edges[from].push(to);
        }
    }

    /// Adds unmarked noise reachable from the current nodes only.
    fn add_noise(&mut self, rng: &mut impl Rng) {
        let first = self.edges.len();
        let count = rng.gen_range(3..=25);
        for _ in 0..count {
            self.node();
        }
        let total = self.edges.len();
        for from in 0..total {
            let fanout = rng.gen_range(0..=2);
            for _ in 0..fanout {
                let to = rng.gen_range(first..total);
                self.edge(from, to);
            }
        }
    }

    /// Renames every node through a random permutation.
    fn finish(self, rng: &mut impl Rng) -> Instance {
        let n = self.edges.len();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        let mut edges = vec![Vec::new(); n];
        let mut marks = vec![[false; 3]; n];
        for old in 0..n {
            let mut outs: Vec<usize> = self.edges[old].iter().map(|&t| perm[t]).collect();
            outs.shuffle(rng);
            edges[perm[old]] = outs;
            marks[perm[old]] = self.marks[old];
        }
        let styles = (0..n).map(|_| rng.gen()).collect();
        Instance {
            edges,
            marks,
            styles,
        }
    }
}

/// Adds a seed that reaches every category within `PLANT_DEPTH - 1` hops
/// and returns it.
fn planted_structure(rng: &mut impl Rng, b: &mut Builder) -> usize {
    let dist: [usize; 3] = [
        rng.gen_range(0..PLANT_DEPTH),
        rng.gen_range(0..PLANT_DEPTH),
        rng.gen_range(0..PLANT_DEPTH),
    ];
    let seed = b.node();
    if rng.gen_bool(0.5) {
        // Spine: seed -> n1 -> n2, category c on the node at dist[c].
        let mut spine = vec![seed];
        for _ in 0..*dist.iter().max().unwrap() {
            let next = b.node();
            b.edge(*spine.last().unwrap(), next);
            spine.push(next);
        }
        for c in 0..3 {
            b.marks[spine[dist[c]]][c] = true;
        }
    } else {
        // Branches: one private chain per category.
        for (c, &d) in dist.iter().enumerate() {
            let mut at = seed;
            for _ in 0..d {
                let next = b.node();
                b.edge(at, next);
                at = next;
            }
            b.marks[at][c] = true;
        }
    }
    if rng.gen_bool(0.4) {
        let from = rng.gen_range(0..b.edges.len());
        b.edge(from, seed);
    }
    if rng.gen_bool(0.3) {
        let caller = b.node();
        b.edge(caller, seed);
    }
    seed
}

pub fn vulnerable(rng: &mut impl Rng) -> Instance {
    let mut b = Builder::new();
    planted_structure(rng, &mut b);
    b.add_noise(rng);
    b.finish(rng)
}

pub fn clean(rng: &mut impl Rng, kind: CleanKind) -> Instance {
    let mut b = Builder::new();
    let mut cats = [KEYWORD, PATH, SINK];
    cats.shuffle(rng);
    match kind {
        CleanKind::MissingCategory => {
            planted_structure(rng, &mut b);
            for marks in &mut b.marks {
                marks[cats[0]] = false;
            }
        }
        CleanKind::BeyondDepth => {
            // s -> a -> b -> c with a back edge b -> a; c sits one hop too far
            // from s, and nothing reaches s again.
            let s = b.node();
            let a = b.node();
            let m = b.node();
            let c = b.node();
            b.edge(s, a);
            b.edge(a, m);
            b.edge(m, c);
            b.edge(m, a);
            b.marks[s][cats[0]] = true;
            b.marks[a][cats[1]] = true;
            b.marks[c][cats[2]] = true;
        }
        CleanKind::Disconnected => {
            let x = b.node();
            let y = b.node();
            b.edge(x, y);
            b.marks[x][cats[0]] = true;
            b.marks[rng.gen_range(0..2)][cats[1]] = true;
            let z = b.node();
            let w = b.node();
            b.edge(w, z);
            b.marks[z][cats[2]] = true;
        }
    }
    b.add_noise(rng);
    b.finish(rng)
}

/// `vulnerable` + `clean` apps in shuffled order, labels checked against the
/// brute-force oracle.
pub fn planted_corpus(rng: &mut impl Rng, vulnerable_n: usize, clean_n: usize) -> Vec<PlantedApp> {
    const KINDS: [CleanKind; 3] = [
        CleanKind::MissingCategory,
        CleanKind::BeyondDepth,
        CleanKind::Disconnected,
    ];
    let mut labels: Vec<bool> = (0..vulnerable_n)
        .map(|_| true)
        .chain((0..clean_n).map(|_| false))
        .collect();
    labels.shuffle(rng);
    let mut clean_seen = 0;
    labels
        .into_iter()
        .enumerate()
        .map(|(i, is_vulnerable)| {
            let instance = if is_vulnerable {
                vulnerable(rng)
            } else {
                clean_seen += 1;
                clean(rng, KINDS[clean_seen % KINDS.len()])
            };
            assert_eq!(
                oracle_flagged(&instance, PLANT_DEPTH),
                is_vulnerable,
                "planted label disagrees with oracle for app {i}"
            );
            PlantedApp {
                app_id: format!("planted.app{i:03}"),
                vulnerable: is_vulnerable,
                instance,
            }
        })
        .collect()
}

/// Writes each app as `<root>/<app_id>/smali/<class>.smali`.
pub fn write_corpus(root: &Path, apps: &[PlantedApp]) {
    for app in apps {
        for (rel, text) in app.instance.class_texts() {
            let path = root.join(&app.app_id).join("smali").join(rel);
            fs::create_dir_all(path.parent().unwrap()).unwrap();
            fs::write(path, text).unwrap();
        }
    }
}
