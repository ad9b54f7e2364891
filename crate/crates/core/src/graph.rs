//! Inter-workbook feeder graph and criticality propagation.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::discovery::{FileId, FileRecord};
use crate::risk::{RiskAssessment, RiskModel};
use crate::workbook::WorkbookFacts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeSource {
    ExternalPart,
    FormulaRef,
}

/// One outgoing reference of a workbook, as written in the file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalTarget {
    pub target: String,
    pub source: EdgeSource,
}

impl ExternalTarget {
    pub fn part(target: impl Into<String>) -> Self {
        Self { target: target.into(), source: EdgeSource::ExternalPart }
    }
}

/// Link part targets, plus a `[n]` placeholder for every index a formula
/// uses that no link part with a path backs.
pub fn external_targets(facts: &WorkbookFacts, formula_indexes: impl IntoIterator<Item = u32>) -> Vec<ExternalTarget> {
    let mut out: Vec<ExternalTarget> = facts.external_targets.iter().filter(|t| !t.is_empty()).map(ExternalTarget::part).collect();
    for n in formula_indexes {
        let backed = n >= 1 && facts.external_targets.get(n as usize - 1).is_some_and(|t| !t.is_empty());
        if !backed {
            out.push(ExternalTarget { target: format!("[{n}]"), source: EdgeSource::FormulaRef });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkNode {
    pub file_id: FileId,
    pub resolved: bool,
}

/// Data flows from `from` (the feeder) to `to` (the dependent).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkEdge {
    pub from: usize,
    pub to: usize,
    pub source: EdgeSource,
}

/// Nodes `0..records.len()` are the inventory records in input order;
/// dangling targets follow, sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkGraph {
    pub nodes: Vec<LinkNode>,
    pub edges: Vec<LinkEdge>,
}

impl LinkGraph {
    pub fn resolved_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.resolved).count()
    }

    pub fn dangling(&self) -> impl Iterator<Item = &LinkNode> {
        self.nodes.iter().filter(|n| !n.resolved)
    }

    pub fn degree(&self, node: usize) -> usize {
        self.edges.iter().filter(|e| e.from == node || e.to == node).count()
    }

    /// `feeder<TAB>dependent<TAB>resolved` per edge; the flag describes the
    /// feeder, since dependents are always inventory records.
    pub fn edge_list(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            let from = &self.nodes[e.from];
            let _ = writeln!(out, "{}\t{}\t{}", from.file_id, self.nodes[e.to].file_id, from.resolved);
        }
        out
    }
}

/// Lexical path normalization: URL prefix and escapes removed, backslashes
/// turned into slashes, `.` and `..` folded. Never touches the filesystem.
pub fn normalize_target(target: &str) -> String {
    let t = target.trim();
    let strip = |prefix: &str| (t.len() >= prefix.len() && t[..prefix.len()].eq_ignore_ascii_case(prefix)).then(|| &t[prefix.len()..]);
    let t = if let Some(rest) = strip("file:///") {
        if has_drive(rest) {
            rest.to_string()
        } else {
            format!("/{rest}")
        }
    } else if let Some(rest) = strip("file://") {
        format!("//{rest}")
    } else if let Some(rest) = strip("file:") {
        rest.to_string()
    } else {
        t.to_string()
    };
    fold_dots(&percent_decode(&t).replace('\\', "/"))
}

fn has_drive(s: &str) -> bool {
    let b = s.as_bytes();
    b.len() >= 2 && b[0].is_ascii_alphabetic() && b[1] == b':'
}

fn is_absolute(s: &str) -> bool {
    s.starts_with('/') || has_drive(s)
}

fn percent_decode(s: &str) -> String {
    let b = s.as_bytes();
    let mut out = Vec::with_capacity(b.len());
    let mut i = 0;
    while i < b.len() {
        if b[i] == b'%' && i + 2 < b.len() {
            if let Some(v) = std::str::from_utf8(&b[i + 1..i + 3]).ok().and_then(|h| u8::from_str_radix(h, 16).ok()) {
                out.push(v);
                i += 3;
                continue;
            }
        }
        out.push(b[i]);
        i += 1;
    }
    String::from_utf8_lossy(&out).into_owned()
}

fn fold_dots(s: &str) -> String {
    let (lead, rest) = if let Some(r) = s.strip_prefix("//") {
        ("//", r)
    } else if let Some(r) = s.strip_prefix('/') {
        ("/", r)
    } else {
        ("", s)
    };
    let mut parts: Vec<&str> = Vec::new();
    for p in rest.split('/') {
        match p {
            "" | "." => {}
            ".." => {
                if parts.last().is_some_and(|l| *l != ".." && !has_drive(l)) {
                    parts.pop();
                } else if lead.is_empty() && parts.is_empty() {
                    parts.push("..");
                }
            }
            p => parts.push(p),
        }
    }
    format!("{lead}{}", parts.join("/"))
}

fn dir_of(path: &str) -> &str {
    path.rfind('/').map_or("", |i| &path[..i])
}

fn join(dir: &str, rel: &str) -> String {
    if dir.is_empty() {
        fold_dots(rel)
    } else {
        fold_dots(&format!("{dir}/{rel}"))
    }
}

fn on_disk(path: &std::path::Path) -> String {
    fold_dots(&path.to_string_lossy().replace('\\', "/"))
}

fn key(path: &str, chain: &[String]) -> String {
    let mut k = path.to_lowercase();
    for c in chain {
        k.push('!');
        k.push_str(&fold_dots(&c.replace('\\', "/")).to_lowercase());
    }
    k
}

/// Candidate identities for a target seen in `record`, most specific first.
fn candidates(record: &FileRecord, target: &str) -> Vec<(String, Vec<String>)> {
    let t = normalize_target(target);
    let outer = on_disk(&record.path);
    if is_absolute(&t) {
        return vec![(t, Vec::new())];
    }
    let mut out = Vec::new();
    if let Some((last, parents)) = record.container_chain.split_last() {
        let inner_dir = dir_of(&fold_dots(&last.replace('\\', "/"))).to_string();
        let mut chain = parents.to_vec();
        chain.push(join(&inner_dir, &t));
        out.push((outer.clone(), chain));
    }
    out.push((join(dir_of(&outer), &t), Vec::new()));
    out
}

pub fn build_graph(records: &[FileRecord], targets: &[Vec<ExternalTarget>]) -> LinkGraph {
    let mut index: HashMap<String, usize> = HashMap::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        index.entry(key(&on_disk(&r.path), &r.container_chain)).or_insert(i);
    }
    let mut nodes: Vec<LinkNode> = records.iter().map(|r| LinkNode { file_id: r.id(), resolved: true }).collect();

    let mut resolved_edges = Vec::new();
    let mut dangling: BTreeMap<String, Vec<(usize, EdgeSource)>> = BTreeMap::new();
    for (to, (record, list)) in records.iter().zip(targets).enumerate() {
        for t in list {
            if t.source == EdgeSource::FormulaRef && t.target.starts_with('[') {
                // An index with no link part names nothing outside this workbook.
                dangling.entry(format!("{}{}", record.id(), t.target)).or_default().push((to, t.source));
                continue;
            }
            let cands = candidates(record, &t.target);
            match cands.iter().find_map(|(p, c)| index.get(&key(p, c))) {
                Some(&from) => resolved_edges.push(LinkEdge { from, to, source: t.source }),
                None => {
                    let (p, c) = cands.last().cloned().unwrap_or_default();
                    let mut name = p;
                    for entry in c {
                        name.push('!');
                        name.push_str(&entry);
                    }
                    dangling.entry(name).or_default().push((to, t.source));
                }
            }
        }
    }

    // Case-insensitive merge of dangling names; the first spelling wins.
    let mut dangling_index: HashMap<String, usize> = HashMap::new();
    let mut edges = resolved_edges;
    for (name, uses) in dangling {
        let id = *dangling_index.entry(name.to_lowercase()).or_insert_with(|| {
            nodes.push(LinkNode { file_id: FileId { path: PathBuf::from(&name), container_chain: Vec::new() }, resolved: false });
            nodes.len() - 1
        });
        edges.extend(uses.into_iter().map(|(to, source)| LinkEdge { from: id, to, source }));
    }

    edges.sort();
    edges.dedup_by(|a, b| a.from == b.from && a.to == b.to);
    LinkGraph { nodes, edges }
}

/// Marks every record that feeds, directly or transitively, a record whose
/// own materiality band is the top band. `assessments` is aligned with the
/// resolved nodes. Cycles terminate because each node is visited once.
pub fn propagate_criticality(graph: &LinkGraph, assessments: &[RiskAssessment], model: &RiskModel) -> Vec<RiskAssessment> {
    let mut out = assessments.to_vec();
    let mut feeders: Vec<Vec<usize>> = vec![Vec::new(); graph.nodes.len()];
    for e in &graph.edges {
        feeders[e.to].push(e.from);
    }
    let mut seen = vec![false; graph.nodes.len()];
    let mut queue = VecDeque::new();
    for (i, a) in assessments.iter().enumerate() {
        if model.is_critical(a) {
            seen[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(n) = queue.pop_front() {
        for &f in &feeders[n] {
            if !seen[f] {
                seen[f] = true;
                queue.push_back(f);
            }
        }
    }
    for (i, a) in out.iter_mut().enumerate() {
        if seen[i] && graph.nodes.get(i).is_some_and(|n| n.resolved) {
            model.mark_inherited(a);
        }
    }
    out
}
