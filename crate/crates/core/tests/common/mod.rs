//! Random app generator and brute-force oracle shared by property tests.
//!
//! An [`Instance`] is an abstract app: an adjacency list over methods plus,
//! for each method, which of the three mark categories it carries. It is
//! rendered to smali text and parsed back, so tests exercise the full
//! parse -> graph -> mark -> detect path while the oracle only looks at the
//! abstract description.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use storescan_core::{parse_class, AppModel, MethodRef};

pub const KEYWORD: usize = 0;
pub const PATH: usize = 1;
pub const SINK: usize = 2;

#[derive(Debug, Clone)]
pub struct Instance {
    pub edges: Vec<Vec<usize>>,
    pub marks: Vec<[bool; 3]>,
    /// Per-method variant choice for how each mark is rendered.
    pub styles: Vec<u8>,
}

pub const CLASSES: usize = 3;

pub fn class_of(i: usize) -> String {
    format!("Lgen/C{};", i % CLASSES)
}

pub fn method_id(i: usize) -> MethodRef {
    MethodRef::new(class_of(i), format!("m{i}"), "()V")
}

const KEYWORD_LITERALS: [&str; 5] = [
    "/appdir/user_log/",
    "cache.db",
    "/x/files/history",
    "account-meta.bin",
    "tmp/uid",
];
const NOISE_LITERALS: [&str; 5] = [
    "hello world",
    "catalog.txt",
    "blog.html",
    "dialogue/",
    "log",
];
const PATH_APIS: [(&str, &str); 3] = [
    (
        "Landroid/os/Environment;",
        "getExternalStorageDirectory()Ljava/io/File;",
    ),
    (
        "Landroid/content/Context;",
        "getExternalFilesDir(Ljava/lang/String;)Ljava/io/File;",
    ),
    (
        "Landroid/content/Context;",
        "getExternalCacheDirs()[Ljava/io/File;",
    ),
];
const HARDCODED: [&str; 3] = ["/sdcard/app", "/sdcard0", "/sdcard1/x/y"];

impl Instance {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    /// Random instance with `1..=max_n` methods.
    pub fn random(rng: &mut impl Rng, max_n: usize) -> Instance {
        let n = rng.gen_range(1..=max_n);
        let density: f64 = rng.gen_range(0.0..0.25);
        let mark_p: f64 = rng.gen_range(0.02..0.3);
        let mut edges = Vec::with_capacity(n);
        for _ in 0..n {
            let mut out: Vec<usize> = (0..n).filter(|_| rng.gen_bool(density)).collect();
            out.shuffle(rng);
            edges.push(out);
        }
        let marks = (0..n)
            .map(|_| {
                [
                    rng.gen_bool(mark_p),
                    rng.gen_bool(mark_p),
                    rng.gen_bool(mark_p),
                ]
            })
            .collect();
        let styles = (0..n).map(|_| rng.gen()).collect();
        Instance {
            edges,
            marks,
            styles,
        }
    }

    fn method_text(&self, i: usize, out: &mut String) {
        let style = self.styles[i] as usize;
        out.push_str(&format!(".method public static m{i}()V\n    .locals 2\n\n"));
        out.push_str(&format!("    .line {}\n", 10 + i));
        out.push_str(&format!(
            "    const-string v1, \"{}\"\n",
            NOISE_LITERALS[style % NOISE_LITERALS.len()]
        ));
        if self.marks[i][KEYWORD] {
            let jumbo = if style & 8 == 0 { "" } else { "/jumbo" };
            out.push_str(&format!(
                "    const-string{jumbo} v0, \"{}\"\n",
                KEYWORD_LITERALS[style % KEYWORD_LITERALS.len()]
            ));
        }
        // Unrelated external call and allocation.
        out.push_str("    invoke-virtual {v1}, Ljava/lang/String;->length()I\n");
        out.push_str("    move-result v0\n");
        // Near misses for each category.
        if style & 64 != 0 {
            out.push_str(
                "    invoke-virtual {p0}, Landroid/content/Context;->getFilesDir()Ljava/io/File;\n",
            );
            out.push_str("    const-string v1, \"/sdcards/backup\"\n");
        }
        if style & 128 != 0 {
            out.push_str("    new-instance v1, Ljava/io/FileInputStream;\n");
            out.push_str(
                "    invoke-direct {v1, v0}, Ljava/io/FileInputStream;-><init>(Ljava/io/File;)V\n",
            );
            out.push_str("    invoke-virtual {v0}, Ljava/io/File;->exists()Z\n");
        }
        if self.marks[i][PATH] {
            if style & 16 == 0 {
                let (class, sig) = PATH_APIS[style % PATH_APIS.len()];
                out.push_str(&format!("    invoke-static {{}}, {class}->{sig}\n"));
                out.push_str("    move-result-object v0\n");
            } else {
                out.push_str(&format!(
                    "    const-string v0, \"{}\"\n",
                    HARDCODED[style % HARDCODED.len()]
                ));
            }
        }
        if self.marks[i][SINK] {
            match style % 3 {
                0 => {
                    out.push_str("    new-instance v0, Ljava/io/FileOutputStream;\n");
                    out.push_str("    invoke-direct {v0, v1}, Ljava/io/FileOutputStream;-><init>(Ljava/lang/String;)V\n");
                }
                1 => out.push_str("    invoke-virtual {v0}, Ljava/io/File;->mkdir()Z\n"),
                _ => out.push_str("    invoke-virtual {v0}, Ljava/io/File;->mkdirs()Z\n"),
            }
        } else {
            out.push_str("    new-instance v0, Ljava/io/File;\n");
        }
        for &callee in &self.edges[i] {
            let target = method_id(callee);
            out.push_str(&format!(
                "    invoke-static {{}}, {}->{}{}\n",
                target.class_descriptor, target.name, target.proto
            ));
            if style & 32 != 0 {
                out.push_str("    :goto_0\n");
            }
        }
        out.push_str("    return-void\n.end method\n\n");
    }

    /// `(relative path, smali text)` per class, in path order.
    pub fn class_texts(&self) -> Vec<(String, String)> {
        let mut texts = Vec::new();
        for c in 0..CLASSES.min(self.len()) {
            let mut text = format!(
                ".class public Lgen/C{c};\n.super Ljava/lang/Object;\n.source \"C{c}.java\"\n\n"
            );
            for i in (c..self.len()).step_by(CLASSES) {
                self.method_text(i, &mut text);
            }
            texts.push((format!("gen/C{c}.smali"), text));
        }
        texts
    }

    pub fn app(&self, app_id: &str) -> AppModel {
        let classes = self
            .class_texts()
            .into_iter()
            .map(|(path, text)| parse_class(&text, &path).expect("generated smali parses"))
            .collect();
        AppModel::new(app_id, classes).unwrap()
    }
}

/// Brute-force bounded reachability: repeatedly expands the frontier set by
/// scanning every edge, `k` times.
pub fn oracle_reachable(edges: &[Vec<usize>], seed: usize, k: usize) -> BTreeSet<usize> {
    let mut seen = BTreeSet::from([seed]);
    for _ in 0..k {
        let mut next = seen.clone();
        for (from, outs) in edges.iter().enumerate() {
            if seen.contains(&from) {
                next.extend(outs.iter().copied());
            }
        }
        if next == seen {
            break;
        }
        seen = next;
    }
    seen
}

pub fn oracle_seed_satisfied(inst: &Instance, seed: usize, depth: usize) -> bool {
    if depth == 0 {
        return false;
    }
    let mut covered = [false; 3];
    for m in oracle_reachable(&inst.edges, seed, depth - 1) {
        for (seen, marked) in covered.iter_mut().zip(inst.marks[m]) {
            *seen |= marked;
        }
    }
    covered.iter().all(|c| *c)
}

pub fn oracle_satisfying_seeds(inst: &Instance, depth: usize) -> BTreeSet<usize> {
    (0..inst.len())
        .filter(|&s| oracle_seed_satisfied(inst, s, depth))
        .collect()
}

pub fn oracle_flagged(inst: &Instance, depth: usize) -> bool {
    !oracle_satisfying_seeds(inst, depth).is_empty()
}

/// Maps a method identity back to its generator index.
pub fn index_of(id: &MethodRef) -> usize {
    id.name[1..].parse().unwrap()
}
