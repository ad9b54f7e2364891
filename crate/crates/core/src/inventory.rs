//! Scan snapshots stored as line-delimited JSON in a catalog directory.
//!
//! Layout: `<catalog>/scan-<scan_id>.jsonl`, one header line followed by one
//! line per record, plus an advisory `<catalog>/lock` held by writers.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::discovery::{FileId, FileRecord};
use crate::error::{Error, Result, ScanError};
use crate::graph::ExternalTarget;
use crate::risk::{MetricsProfile, RiskAssessment, RiskLevel};

pub const SNAPSHOT_SCHEMA_VERSION: u32 = 1;

/// One inventoried spreadsheet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InventoryEntry {
    pub record: FileRecord,
    pub metrics: MetricsProfile,
    pub assessment: RiskAssessment,
    /// Outgoing references, kept so the link graph can be rebuilt from a
    /// snapshot alone.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub external_targets: Vec<ExternalTarget>,
}

impl InventoryEntry {
    pub fn id(&self) -> FileId {
        self.record.id()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InventorySnapshot {
    pub scan_id: String,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub records: Vec<InventoryEntry>,
    pub errors: Vec<ScanError>,
}

impl InventorySnapshot {
    pub fn new(scan_id: impl Into<String>, started_at: DateTime<Utc>, finished_at: DateTime<Utc>) -> Self {
        Self { scan_id: scan_id.into(), started_at, finished_at, records: Vec::new(), errors: Vec::new() }
    }

    /// Restores the record order invariant.
    pub fn sort(&mut self) {
        self.records.sort_by(|a, b| (&a.record.path, &a.record.container_chain).cmp(&(&b.record.path, &b.record.container_chain)));
    }

    pub fn file_name(&self) -> String {
        format!("scan-{}.jsonl", self.scan_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Header {
    schema_version: u32,
    scan_id: String,
    started_at: DateTime<Utc>,
    finished_at: DateTime<Utc>,
    record_count: usize,
    errors: Vec<ScanError>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
#[allow(clippy::large_enum_variant)]
enum Line {
    Header(Header),
    Record(InventoryEntry),
}

/// A scan id derived from the start time, unique within `catalog`.
pub fn new_scan_id(catalog: &Path, started_at: DateTime<Utc>) -> String {
    let base = started_at.format("%Y%m%dT%H%M%S%.6fZ").to_string();
    let mut id = base.clone();
    let mut n = 1;
    while catalog.join(format!("scan-{id}.jsonl")).exists() {
        n += 1;
        id = format!("{base}-{n}");
    }
    id
}

/// Writes the snapshot atomically. Existing snapshot files are never
/// replaced.
pub fn save_snapshot(snapshot: &InventorySnapshot, catalog: &Path) -> Result<PathBuf> {
    let fail = |source: std::io::Error| Error::CatalogWriteFailed { path: catalog.to_path_buf(), source };
    fs::create_dir_all(catalog).map_err(fail)?;
    let target = catalog.join(snapshot.file_name());
    let tmp = tempfile::Builder::new().prefix(".scan-").suffix(".tmp").tempfile_in(catalog).map_err(fail)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        let header = Line::Header(Header {
            schema_version: SNAPSHOT_SCHEMA_VERSION,
            scan_id: snapshot.scan_id.clone(),
            started_at: snapshot.started_at,
            finished_at: snapshot.finished_at,
            record_count: snapshot.records.len(),
            errors: snapshot.errors.clone(),
        });
        write_line(&mut w, &header).map_err(fail)?;
        for entry in &snapshot.records {
            // Serialize by reference to avoid cloning every record.
            write_line(&mut w, &RecordRef { kind: "record", entry }).map_err(fail)?;
        }
        w.flush().map_err(fail)?;
    }
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist_noclobber(&target).map_err(|e| Error::CatalogWriteFailed { path: target.clone(), source: e.error })?;
    Ok(target)
}

#[derive(Serialize)]
struct RecordRef<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    #[serde(flatten)]
    entry: &'a InventoryEntry,
}

fn write_line(w: &mut impl Write, value: &impl Serialize) -> std::io::Result<()> {
    serde_json::to_writer(&mut *w, value)?;
    w.write_all(b"\n")
}

pub fn load_snapshot(path: &Path) -> Result<InventorySnapshot> {
    let corrupt = |line: usize, message: String| Error::CatalogCorrupt { path: path.to_path_buf(), line, message };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();

    let header = match lines.next() {
        None => return Err(corrupt(1, "missing header line".into())),
        Some(line) => {
            let line = line.map_err(|e| corrupt(1, e.to_string()))?;
            match serde_json::from_str::<Line>(&line) {
                Ok(Line::Header(h)) => h,
                Ok(Line::Record(_)) => return Err(corrupt(1, "expected a header line".into())),
                Err(e) => return Err(corrupt(1, e.to_string())),
            }
        }
    };
    if header.schema_version != SNAPSHOT_SCHEMA_VERSION {
        return Err(corrupt(1, format!("unsupported schema_version {}", header.schema_version)));
    }
    let mut snapshot = InventorySnapshot {
        scan_id: header.scan_id,
        started_at: header.started_at,
        finished_at: header.finished_at,
        records: Vec::with_capacity(header.record_count),
        errors: header.errors,
    };
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let line = line.map_err(|e| corrupt(n, e.to_string()))?;
        match serde_json::from_str::<Line>(&line) {
            Ok(Line::Record(r)) => snapshot.records.push(r),
            Ok(Line::Header(_)) => return Err(corrupt(n, "unexpected second header".into())),
            Err(e) => return Err(corrupt(n, e.to_string())),
        }
    }
    if snapshot.records.len() != header.record_count {
        return Err(corrupt(
            snapshot.records.len() + 2,
            format!("header announces {} records, found {}", header.record_count, snapshot.records.len()),
        ));
    }
    Ok(snapshot)
}

fn read_header(path: &Path) -> Option<Header> {
    let mut first = String::new();
    BufReader::new(File::open(path).ok()?).read_line(&mut first).ok()?;
    match serde_json::from_str::<Line>(&first).ok()? {
        Line::Header(h) => Some(h),
        Line::Record(_) => None,
    }
}

fn snapshot_files(catalog: &Path) -> Vec<PathBuf> {
    let Ok(dir) = fs::read_dir(catalog) else {
        return Vec::new();
    };
    let mut files: Vec<PathBuf> = dir
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("scan-") && n.ends_with(".jsonl")))
        .collect();
    files.sort();
    files
}

/// Readable snapshots in the catalog, oldest first by finish time. Files
/// whose header cannot be read are skipped.
pub fn list_snapshots(catalog: &Path) -> Vec<(PathBuf, DateTime<Utc>)> {
    let mut out: Vec<_> = snapshot_files(catalog).into_iter().filter_map(|p| read_header(&p).map(|h| (p, h.finished_at))).collect();
    out.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    out
}

pub fn latest_snapshot(catalog: &Path) -> Option<(PathBuf, DateTime<Utc>)> {
    list_snapshots(catalog).pop()
}

pub fn last_scan_time(catalog: &Path) -> Option<DateTime<Utc>> {
    latest_snapshot(catalog).map(|(_, t)| t)
}

/// Exclusive advisory lock on `<catalog>/lock`, released on drop.
#[derive(Debug)]
pub struct CatalogLock {
    _file: File,
}

impl CatalogLock {
    pub fn acquire(catalog: &Path) -> Result<Self> {
        let fail = |source: std::io::Error| Error::CatalogWriteFailed { path: catalog.join("lock"), source };
        fs::create_dir_all(catalog).map_err(fail)?;
        let file = fs::OpenOptions::new().create(true).truncate(false).write(true).open(catalog.join("lock")).map_err(fail)?;
        file.lock().map_err(fail)?;
        Ok(Self { _file: file })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffReport {
    pub new: Vec<FileId>,
    pub modified: Vec<FileId>,
    pub deleted: Vec<FileId>,
    pub unchanged: Vec<FileId>,
    pub newly_high_risk: Vec<FileId>,
}

impl DiffReport {
    /// True when nothing was added, changed or removed.
    pub fn is_quiet(&self) -> bool {
        self.new.is_empty() && self.modified.is_empty() && self.deleted.is_empty()
    }
}

pub fn diff(previous: &InventorySnapshot, current: &InventorySnapshot) -> DiffReport {
    let before: BTreeMap<FileId, &InventoryEntry> = previous.records.iter().map(|e| (e.id(), e)).collect();
    let after: BTreeMap<FileId, &InventoryEntry> = current.records.iter().map(|e| (e.id(), e)).collect();
    let mut report = DiffReport::default();
    for (id, now) in &after {
        match before.get(id) {
            None => report.new.push(id.clone()),
            Some(then) if then.record.content_hash != now.record.content_hash => report.modified.push(id.clone()),
            Some(_) => report.unchanged.push(id.clone()),
        }
        let was_high = before.get(id).is_some_and(|then| then.assessment.risk == RiskLevel::High);
        if now.assessment.risk == RiskLevel::High && !was_high {
            report.newly_high_risk.push(id.clone());
        }
    }
    report.deleted = before.keys().filter(|id| !after.contains_key(*id)).cloned().collect();
    report
}
