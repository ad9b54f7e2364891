//! Report rendering.
//!
//! Always written: `summary.json`, `diff.json`, `graph.tsv`. With the CSV
//! format: `inventory.csv`, `high_risk.csv`, `violations.csv`, `errors.csv`.
//! With the structured format: the same four as `.jsonl`.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::config::ReportFormat;
use crate::discovery::{FileId, FileKind};
use crate::error::{Error, Result, ScanError};
use crate::graph::{build_graph, LinkGraph};
use crate::inventory::{DiffReport, InventoryEntry, InventorySnapshot};
use crate::risk::RiskLevel;

/// Column order of every record CSV.
pub const REPORT_COLUMNS: [&str; 18] = [
    "path",
    "container_chain",
    "kind",
    "extension",
    "extension_mismatch",
    "size_bytes",
    "modified_at",
    "content_hash",
    "metrics_available",
    "materiality_score",
    "materiality_band",
    "complexity_score",
    "complexity_band",
    "effective_materiality_band",
    "inherited_critical",
    "risk",
    "matched_materiality_rules",
    "matched_complexity_rules",
];

pub const ERROR_COLUMNS: [&str; 4] = ["kind", "path", "container_chain", "message"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRow {
    pub path: String,
    pub container_chain: Vec<String>,
    pub kind: FileKind,
    pub extension: String,
    pub extension_mismatch: bool,
    pub size_bytes: u64,
    pub modified_at: DateTime<Utc>,
    pub content_hash: String,
    pub metrics_available: bool,
    pub materiality_score: u64,
    pub materiality_band: String,
    pub complexity_score: u64,
    pub complexity_band: String,
    pub effective_materiality_band: String,
    pub inherited_critical: bool,
    pub risk: RiskLevel,
    pub matched_materiality_rules: Vec<String>,
    pub matched_complexity_rules: Vec<String>,
}

impl ReportRow {
    pub fn from_entry(e: &InventoryEntry) -> Self {
        let (r, a) = (&e.record, &e.assessment);
        Self {
            path: r.path.to_string_lossy().into_owned(),
            container_chain: r.container_chain.clone(),
            kind: r.kind,
            extension: r.extension.clone(),
            extension_mismatch: r.extension_mismatch,
            size_bytes: r.size_bytes,
            modified_at: r.modified_at,
            content_hash: r.content_hash.clone(),
            metrics_available: e.metrics.available,
            materiality_score: a.materiality_score,
            materiality_band: a.materiality_band.clone(),
            complexity_score: a.complexity_score,
            complexity_band: a.complexity_band.clone(),
            effective_materiality_band: a.effective_materiality_band.clone(),
            inherited_critical: a.inherited_critical,
            risk: a.risk,
            matched_materiality_rules: a.matched_materiality_rule_ids.clone(),
            matched_complexity_rules: a.matched_complexity_rule_ids.clone(),
        }
    }

    fn csv_fields(&self) -> [String; 18] {
        [
            self.path.clone(),
            self.container_chain.join("!"),
            self.kind.as_str().to_string(),
            self.extension.clone(),
            self.extension_mismatch.to_string(),
            self.size_bytes.to_string(),
            self.modified_at.to_rfc3339_opts(SecondsFormat::AutoSi, true),
            self.content_hash.clone(),
            self.metrics_available.to_string(),
            self.materiality_score.to_string(),
            self.materiality_band.clone(),
            self.complexity_score.to_string(),
            self.complexity_band.clone(),
            self.effective_materiality_band.clone(),
            self.inherited_critical.to_string(),
            self.risk.as_str().to_string(),
            self.matched_materiality_rules.join(";"),
            self.matched_complexity_rules.join(";"),
        ]
    }
}

/// Report order: risk descending, materiality score descending, then path
/// and container chain ascending.
pub fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|a, b| {
        (Reverse(a.risk), Reverse(a.materiality_score), &a.path, &a.container_chain).cmp(&(
            Reverse(b.risk),
            Reverse(b.materiality_score),
            &b.path,
            &b.container_chain,
        ))
    });
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateGroup {
    pub content_hash: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffCounts {
    pub new: usize,
    pub modified: usize,
    pub deleted: usize,
    pub unchanged: usize,
    pub newly_high_risk: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub scan_id: String,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub record_total: usize,
    pub by_risk: BTreeMap<String, usize>,
    pub by_kind: BTreeMap<String, usize>,
    pub metrics_unavailable: usize,
    pub inherited_critical: usize,
    pub error_total: usize,
    pub errors_by_kind: BTreeMap<String, usize>,
    pub duplicate_hash_groups: Vec<DuplicateGroup>,
    /// Feeders named by external references that are not in the inventory.
    pub dangling_feeders: Vec<String>,
    pub diff: DiffCounts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub inventory: Vec<ReportRow>,
    pub high_risk: Vec<ReportRow>,
    pub violations: Vec<ReportRow>,
    pub errors: Vec<ScanError>,
    pub summary: Summary,
    pub graph: LinkGraph,
    pub diff: DiffReport,
}

impl ReportBundle {
    pub fn build(snapshot: &InventorySnapshot, diff: &DiffReport) -> Self {
        let mut inventory: Vec<ReportRow> = snapshot.records.iter().map(ReportRow::from_entry).collect();
        sort_rows(&mut inventory);
        let high_risk: Vec<ReportRow> = inventory.iter().filter(|r| r.risk == RiskLevel::High).cloned().collect();
        let flagged: BTreeSet<&FileId> = diff.newly_high_risk.iter().collect();
        let mut violations: Vec<ReportRow> =
            snapshot.records.iter().filter(|e| flagged.contains(&e.id())).map(ReportRow::from_entry).collect();
        sort_rows(&mut violations);

        let records: Vec<_> = snapshot.records.iter().map(|e| e.record.clone()).collect();
        let targets: Vec<_> = snapshot.records.iter().map(|e| e.external_targets.clone()).collect();
        let graph = build_graph(&records, &targets);

        let mut by_risk: BTreeMap<String, usize> = RiskLevel::ALL.iter().map(|l| (l.as_str().to_string(), 0)).collect();
        let mut by_kind: BTreeMap<String, usize> =
            FileKind::ALL.iter().filter(|k| k.is_spreadsheet()).map(|k| (k.as_str().to_string(), 0)).collect();
        let mut hashes: BTreeMap<&str, Vec<String>> = BTreeMap::new();
        for e in &snapshot.records {
            *by_risk.entry(e.assessment.risk.as_str().into()).or_default() += 1;
            *by_kind.entry(e.record.kind.as_str().into()).or_default() += 1;
            hashes.entry(&e.record.content_hash).or_default().push(e.record.display_path());
        }
        let mut errors_by_kind = BTreeMap::new();
        for e in &snapshot.errors {
            *errors_by_kind.entry(e.kind.as_str().to_string()).or_default() += 1;
        }
        let summary = Summary {
            scan_id: snapshot.scan_id.clone(),
            started_at: snapshot.started_at,
            finished_at: snapshot.finished_at,
            record_total: snapshot.records.len(),
            by_risk,
            by_kind,
            metrics_unavailable: snapshot.records.iter().filter(|e| !e.metrics.available).count(),
            inherited_critical: snapshot.records.iter().filter(|e| e.assessment.inherited_critical).count(),
            error_total: snapshot.errors.len(),
            errors_by_kind,
            duplicate_hash_groups: hashes
                .into_iter()
                .filter(|(_, m)| m.len() > 1)
                .map(|(h, members)| DuplicateGroup { content_hash: h.to_string(), members })
                .collect(),
            dangling_feeders: graph.dangling().map(|n| n.file_id.to_string()).collect(),
            diff: DiffCounts {
                new: diff.new.len(),
                modified: diff.modified.len(),
                deleted: diff.deleted.len(),
                unchanged: diff.unchanged.len(),
                newly_high_risk: diff.newly_high_risk.len(),
            },
        };
        Self { inventory, high_risk, violations, errors: snapshot.errors.clone(), summary, graph, diff: diff.clone() }
    }
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let path = dir.join(name);
    let fail = |e: &dyn std::fmt::Display| Error::ReportWriteFailed { path: path.clone(), message: e.to_string() };
    let mut tmp = tempfile::Builder::new().prefix(".report-").tempfile_in(dir).map_err(|e| fail(&e))?;
    tmp.write_all(bytes).map_err(|e| fail(&e))?;
    tmp.persist(&path).map_err(|e| fail(&e.error))?;
    Ok(path)
}

fn rows_csv(rows: &[ReportRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORT_COLUMNS).expect("in-memory write");
    for r in rows {
        w.write_record(r.csv_fields()).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

fn errors_csv(errors: &[ScanError]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(ERROR_COLUMNS).expect("in-memory write");
    for e in errors {
        let path = e.path.to_string_lossy();
        w.write_record([e.kind.as_str(), path.as_ref(), &e.container_chain.join("!"), &e.message]).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

fn jsonl<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("serializable");
        out.push(b'\n');
    }
    out
}

fn pretty(value: &impl Serialize) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable");
    out.push(b'\n');
    out
}

/// Writes the bundle's files and returns their paths in write order.
pub fn write_bundle(bundle: &ReportBundle, formats: &BTreeSet<ReportFormat>, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::ReportWriteFailed { path: out_dir.to_path_buf(), message: e.to_string() })?;
    let mut written = Vec::new();
    if formats.contains(&ReportFormat::Csv) {
        written.push(write_atomic(out_dir, "inventory.csv", &rows_csv(&bundle.inventory))?);
        written.push(write_atomic(out_dir, "high_risk.csv", &rows_csv(&bundle.high_risk))?);
        written.push(write_atomic(out_dir, "violations.csv", &rows_csv(&bundle.violations))?);
        written.push(write_atomic(out_dir, "errors.csv", &errors_csv(&bundle.errors))?);
    }
    if formats.contains(&ReportFormat::Structured) {
        written.push(write_atomic(out_dir, "inventory.jsonl", &jsonl(&bundle.inventory))?);
        written.push(write_atomic(out_dir, "high_risk.jsonl", &jsonl(&bundle.high_risk))?);
        written.push(write_atomic(out_dir, "violations.jsonl", &jsonl(&bundle.violations))?);
        written.push(write_atomic(out_dir, "errors.jsonl", &jsonl(&bundle.errors))?);
    }
    written.push(write_atomic(out_dir, "summary.json", &pretty(&bundle.summary))?);
    written.push(write_atomic(out_dir, "diff.json", &pretty(&bundle.diff))?);
    written.push(write_atomic(out_dir, "graph.tsv", bundle.graph.edge_list().as_bytes())?);
    Ok(written)
}

pub fn render_reports(
    snapshot: &InventorySnapshot,
    diff: &DiffReport,
    formats: &BTreeSet<ReportFormat>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    write_bundle(&ReportBundle::build(snapshot, diff), formats, out_dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discovery::tests::record_for;
    use crate::risk::{MetricsProfile, RiskModel};

    fn entry(path: &str, risk: RiskLevel, materiality: u64) -> InventoryEntry {
        let record = record_for(path, path.as_bytes());
        let metrics = MetricsProfile { available: true, ..Default::default() };
        let mut assessment = RiskModel::default().assess(None, &record, &metrics);
        assessment.risk = risk;
        assessment.materiality_score = materiality;
        InventoryEntry { record, metrics, assessment, external_targets: Vec::new() }
    }

    fn snapshot(entries: Vec<InventoryEntry>) -> InventorySnapshot {
        let mut s = InventorySnapshot::new("s", DateTime::<Utc>::UNIX_EPOCH, DateTime::<Utc>::UNIX_EPOCH);
        s.records = entries;
        s.sort();
        s
    }

    fn all() -> BTreeSet<ReportFormat> {
        [ReportFormat::Csv, ReportFormat::Structured].into()
    }

    #[test]
    fn high_risk_subset_and_order() {
        let s = snapshot(vec![
            entry("/z.xlsx", RiskLevel::High, 50),
            entry("/a.xlsx", RiskLevel::Low, 99),
            entry("/m.xlsx", RiskLevel::High, 50),
            entry("/b.xlsx", RiskLevel::High, 70),
        ]);
        let b = ReportBundle::build(&s, &DiffReport::default());
        let order: Vec<&str> = b.inventory.iter().map(|r| r.path.as_str()).collect();
        assert_eq!(order, vec!["/b.xlsx", "/m.xlsx", "/z.xlsx", "/a.xlsx"]);
        assert_eq!(b.high_risk.len(), 3);
        assert!(b.high_risk.iter().all(|r| b.inventory.contains(r)));
        assert_eq!(b.summary.by_risk.values().sum::<usize>(), b.summary.record_total);
        assert_eq!(b.summary.by_kind.values().sum::<usize>(), b.summary.record_total);
    }

    #[test]
    fn csv_counts_and_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let s =
            snapshot(vec![entry("/a.xlsx", RiskLevel::High, 1), entry("/b.xlsx", RiskLevel::Low, 1), entry("/c.xlsx", RiskLevel::High, 1)]);
        render_reports(&s, &DiffReport::default(), &all(), dir.path()).unwrap();
        let high = fs::read_to_string(dir.path().join("high_risk.csv")).unwrap();
        assert_eq!(high.lines().count(), 3);
        assert!(high.starts_with("path,container_chain,kind,"));

        let empty = tempfile::tempdir().unwrap();
        let written = render_reports(&snapshot(vec![]), &DiffReport::default(), &all(), empty.path()).unwrap();
        assert_eq!(written.len(), 11);
        for name in ["inventory.csv", "high_risk.csv", "violations.csv"] {
            assert_eq!(fs::read_to_string(empty.path().join(name)).unwrap().lines().count(), 1);
        }
        let summary: Summary = serde_json::from_slice(&fs::read(empty.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary.record_total, 0);
        assert!(summary.by_risk.values().all(|&n| n == 0));
    }

    #[test]
    fn quoting_and_duplicates() {
        let mut a = entry("/x/a,\"b\".xlsx", RiskLevel::Low, 0);
        let mut b = entry("/y/copy.xlsx", RiskLevel::Low, 0);
        a.record.content_hash = "h".into();
        b.record.content_hash = "h".into();
        let s = snapshot(vec![a, b]);
        let bundle = ReportBundle::build(&s, &DiffReport::default());
        assert_eq!(bundle.summary.duplicate_hash_groups.len(), 1);
        let text = String::from_utf8(rows_csv(&bundle.inventory)).unwrap();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let paths: Vec<String> = reader.records().map(|r| r.unwrap()[0].to_string()).collect();
        assert!(paths.contains(&"/x/a,\"b\".xlsx".to_string()));
    }

    #[test]
    fn unwritable_output_dir() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("file");
        fs::write(&file, "x").unwrap();
        let err = render_reports(&snapshot(vec![]), &DiffReport::default(), &all(), &file).unwrap_err();
        assert_eq!(err.code(), "report-write-failed");
    }
}
