//! End-to-end run: discover, analyze, score, link, snapshot, diff, report.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use tracing::info;

use crate::config::PipelineConfig;
use crate::discovery::{read_record_bytes, ArchiveLimits, Discoverer, Discovery, FileKind, FileRecord};
use crate::error::{Result, ScanError, ScanErrorKind};
use crate::graph::{build_graph, external_targets, propagate_criticality, ExternalTarget};
use crate::inventory::{self, CatalogLock, DiffReport, InventoryEntry, InventorySnapshot};
use crate::report::{write_bundle, ReportBundle};
use crate::risk::{analyze_formulas, compute_metrics, MetricsProfile, RiskAssessment, RiskModel};
use crate::workbook::{parse_workbook, WorkbookFacts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Discover,
    Analyze,
    Score,
    Link,
    Snapshot,
    Diff,
    Report,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Discover => "discover",
            Stage::Analyze => "analyze",
            Stage::Score => "score",
            Stage::Link => "link",
            Stage::Snapshot => "snapshot",
            Stage::Diff => "diff",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Process exit contract: 0 clean, 2 newly high-risk findings, 1 failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Clean,
    Violations,
    Errors,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Clean => 0,
            ExitStatus::Violations => 2,
            ExitStatus::Errors => 1,
        }
    }

    pub fn for_diff(diff: &DiffReport) -> Self {
        if diff.newly_high_risk.is_empty() {
            ExitStatus::Clean
        } else {
            ExitStatus::Violations
        }
    }
}

/// Per-record analysis before scoring.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub record: FileRecord,
    pub facts: Option<WorkbookFacts>,
    pub metrics: MetricsProfile,
    pub targets: Vec<ExternalTarget>,
    pub error: Option<ScanError>,
}

/// Reads and parses one record. Failures degrade to unavailable metrics
/// plus a record-level error; the record stays in the inventory.
pub fn analyze_record(record: &FileRecord, limits: &ArchiveLimits) -> Analysis {
    let size = record.size_bytes;
    let unavailable = |reason: &str, error: Option<ScanError>| Analysis {
        record: record.clone(),
        facts: None,
        metrics: MetricsProfile::unavailable(reason, size, record.kind == FileKind::EncryptedSpreadsheet),
        targets: Vec::new(),
        error,
    };
    match record.kind {
        FileKind::LegacyBinarySpreadsheet => return unavailable("legacy-format", None),
        FileKind::EncryptedSpreadsheet => return unavailable("encrypted", None),
        _ => {}
    }
    let bytes = match read_record_bytes(record, limits) {
        Ok(b) => b,
        Err(e) => {
            let err = ScanError::new(ScanErrorKind::AccessDenied, &record.path, e.to_string()).nested(&record.container_chain);
            return unavailable("unreadable", Some(err));
        }
    };
    let facts = match parse_workbook(record, &bytes) {
        Ok(f) => f,
        Err(e) => return unavailable(e.kind.as_str(), Some(e)),
    };
    let formulas = analyze_formulas(&facts);
    let metrics = compute_metrics(&facts, &formulas);
    let indexes: BTreeSet<u32> = formulas.iter().flatten().flat_map(|s| s.external_indexes.iter().copied()).collect();
    let targets = external_targets(&facts, indexes);
    Analysis { record: record.clone(), facts: Some(facts), metrics, targets, error: None }
}

fn score(model: &RiskModel, a: Analysis) -> (InventoryEntry, Option<ScanError>) {
    let facts = a.facts.as_ref().filter(|_| a.metrics.available);
    let assessment = model.assess(facts, &a.record, &a.metrics);
    (InventoryEntry { record: a.record, metrics: a.metrics, assessment, external_targets: a.targets }, a.error)
}

fn propagate(entries: &[InventoryEntry], model: &RiskModel) -> Vec<RiskAssessment> {
    let records: Vec<FileRecord> = entries.iter().map(|e| e.record.clone()).collect();
    let targets: Vec<_> = entries.iter().map(|e| e.external_targets.clone()).collect();
    let graph = build_graph(&records, &targets);
    let assessments: Vec<_> = entries.iter().map(|e| e.assessment.clone()).collect();
    propagate_criticality(&graph, &assessments, model)
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub snapshot: InventorySnapshot,
    pub snapshot_path: PathBuf,
    pub previous: Option<PathBuf>,
    pub diff: DiffReport,
    pub bundle: ReportBundle,
    pub written: Vec<PathBuf>,
    pub stages: Vec<Stage>,
    pub status: ExitStatus,
}

/// Discovery only, honoring `since_last_scan` against the catalog.
pub fn run_scan(config: &PipelineConfig) -> Result<Discovery> {
    config.validate()?;
    let last = last_scan_for(config);
    Discoverer::new(&config.filter, config.archive)?.discover(&config.roots, last)
}

fn last_scan_for(config: &PipelineConfig) -> Option<DateTime<Utc>> {
    if config.filter.since_last_scan {
        inventory::last_scan_time(&config.catalog_dir)
    } else {
        None
    }
}

pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutcome> {
    config.validate()?;
    let _lock = CatalogLock::acquire(&config.catalog_dir)?;
    let started_at = Utc::now();
    let mut stages = Vec::new();
    let mut enter = |s: Stage| {
        info!(stage = s.as_str(), "stage start");
        stages.push(s);
    };

    enter(Stage::Discover);
    let last = last_scan_for(config);
    let discovery = Discoverer::new(&config.filter, config.archive)?.discover(&config.roots, last)?;
    info!(records = discovery.records.len(), errors = discovery.errors.len(), "discovered");

    enter(Stage::Analyze);
    let analyses: Vec<Analysis> = discovery.records.par_iter().map(|r| analyze_record(r, &config.archive)).collect();

    enter(Stage::Score);
    let scored: Vec<(InventoryEntry, Option<ScanError>)> = analyses.into_par_iter().map(|a| score(&config.model, a)).collect();
    let mut entries = Vec::with_capacity(scored.len());
    let mut errors = discovery.errors;
    for (e, err) in scored {
        entries.push(e);
        errors.extend(err);
    }

    enter(Stage::Link);
    let propagated = propagate(&entries, &config.model);
    let mut inherited = 0;
    for (e, a) in entries.iter_mut().zip(propagated) {
        inherited += usize::from(a.inherited_critical);
        e.assessment = a;
    }
    info!(inherited, "criticality propagated");

    enter(Stage::Snapshot);
    let previous = inventory::latest_snapshot(&config.catalog_dir).map(|(p, _)| p);
    let previous_snapshot = previous.as_deref().map(inventory::load_snapshot).transpose()?;
    errors.sort();
    errors.dedup();
    let finished_at = Utc::now();
    let mut snapshot = InventorySnapshot {
        scan_id: inventory::new_scan_id(&config.catalog_dir, started_at),
        started_at,
        finished_at,
        records: entries,
        errors,
    };
    snapshot.sort();
    let snapshot_path = inventory::save_snapshot(&snapshot, &config.catalog_dir)?;

    enter(Stage::Diff);
    let empty = InventorySnapshot::new("", started_at, started_at);
    let diff = inventory::diff(previous_snapshot.as_ref().unwrap_or(&empty), &snapshot);
    info!(new = diff.new.len(), modified = diff.modified.len(), deleted = diff.deleted.len(), "diffed");

    enter(Stage::Report);
    let bundle = ReportBundle::build(&snapshot, &diff);
    let written = write_bundle(&bundle, &config.report_formats, &config.output_dir)?;

    let status = ExitStatus::for_diff(&diff);
    Ok(PipelineOutcome { snapshot, snapshot_path, previous, diff, bundle, written, stages, status })
}
